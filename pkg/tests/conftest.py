import numpy as np
import pytest

from scarvox import BinaryMask, Spacing


def random_mask(rng, dims, density=0.2, spacing=None, nonempty=True, nonfull=False):
    """Seeded random mask; guarantees at least one set (and one unset) voxel."""
    data = (rng.random(dims) < density)
    if nonempty and not data.any():
        data.flat[rng.integers(0, data.size)] = True
    if nonfull and data.all():
        data.flat[rng.integers(0, data.size)] = False
    return BinaryMask(data, spacing or Spacing(1.0, 1.0, 1.0))


def random_spacing(rng, lo=0.5, hi=3.0):
    return Spacing(*rng.uniform(lo, hi, 3))


@pytest.fixture(scope="session", autouse=True)
def warm_edt_kernel():
    """Compile the numba kernel once so timed tests measure steady state."""
    from scarvox import edt

    m = np.zeros((3, 3, 3), np.uint8)
    m[1, 1, 1] = 1
    edt(BinaryMask(m, Spacing(1.0, 1.0, 1.0)))
