"""Shared voxel-grid data model: spacing, scalar volumes, binary masks.

Axis convention (used by every module and by file I/O): arrays are
C-contiguous with shape ``(nx, ny, nz)`` and are indexed ``data[ix, iy, iz]``.
The z index varies fastest in the flat buffer.  Spacing is millimeters per
voxel along (x, y, z); world coordinates put voxel (0, 0, 0) at the origin.

Volumes and masks are immutable after construction (the backing numpy array
is marked read-only), so every operation in the toolkit is a pure function
that is safe to call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ShapeError

# Relative tolerance for spacing equality; medical headers store spacing as
# 32-bit floats, so bit-exact comparison would reject legitimate matches.
SPACING_RTOL = 1e-6


@dataclass(frozen=True)
class Spacing:
    """Physical voxel size in millimeters along each axis."""

    sx: float
    sy: float
    sz: float

    def __post_init__(self):
        for name, v in (("sx", self.sx), ("sy", self.sy), ("sz", self.sz)):
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValueError(f"spacing {name} must be a positive finite number, got {v!r}")

    @property
    def in_plane(self) -> float:
        """min(sx, sy) — the in-plane resolution."""
        return min(self.sx, self.sy)

    def as_array(self) -> np.ndarray:
        return np.array([self.sx, self.sy, self.sz], dtype=np.float64)

    def isclose(self, other: "Spacing", rtol: float = SPACING_RTOL) -> bool:
        a = self.as_array()
        b = other.as_array()
        return bool(np.all(np.abs(a - b) <= rtol * np.maximum(np.abs(a), np.abs(b))))


def _freeze(arr: np.ndarray) -> np.ndarray:
    """Mark a freshly created array immutable."""
    out = np.ascontiguousarray(arr)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class ScalarVolume:
    """3-D grid of real values (image intensities, SDMs, logits, probabilities).

    ``data`` is float64, shape (nx, ny, nz), read-only, all values finite.
    """

    data: np.ndarray
    spacing: Spacing

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float64, order="C")
        if arr.ndim != 3 or min(arr.shape) < 1:
            raise ValueError(f"volume data must be 3-D and non-empty, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("volume contains non-finite values")
        object.__setattr__(self, "data", _freeze(arr))

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.data.shape

    @property
    def num_voxels(self) -> int:
        return int(self.data.size)


@dataclass(frozen=True)
class BinaryMask:
    """3-D grid of {0, 1} values, one uint8 byte per voxel."""

    data: np.ndarray
    spacing: Spacing

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 3 or min(arr.shape) < 1:
            raise ValueError(f"mask data must be 3-D and non-empty, got shape {arr.shape}")
        if arr.dtype != bool and not np.isin(arr, (0, 1)).all():
            raise ValueError("mask contains values outside {0, 1}")
        object.__setattr__(self, "data", _freeze(arr.astype(np.uint8)))

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.data.shape

    @property
    def num_voxels(self) -> int:
        return int(self.data.size)

    def count(self) -> int:
        """Number of foreground voxels."""
        return int(self.data.sum(dtype=np.int64))

    def as_bool(self) -> np.ndarray:
        return self.data.view(bool)

    def complement(self) -> "BinaryMask":
        return BinaryMask(1 - self.data, self.spacing)


Grid = ScalarVolume | BinaryMask


def voxel_to_world(index: tuple[int, int, int], spacing: Spacing,
                   dims: tuple[int, int, int] | None = None) -> tuple[float, float, float]:
    """Map a voxel index to world millimeters: (i*sx, j*sy, k*sz).

    Purely affine with the origin at voxel (0, 0, 0).  When ``dims`` is
    given, out-of-range indices raise IndexError.
    """
    i, j, k = index
    if dims is not None:
        for v, n in zip((i, j, k), dims):
            if not (0 <= v < n):
                raise IndexError(f"voxel index {index} outside grid {dims}")
    return (i * spacing.sx, j * spacing.sy, k * spacing.sz)


def masks_compatible(a: Grid, b: Grid) -> bool:
    """True iff dims match and spacing agrees within SPACING_RTOL."""
    return a.dims == b.dims and a.spacing.isclose(b.spacing)


def require_compatible(a: Grid, b: Grid, what: str = "grids") -> None:
    if not masks_compatible(a, b):
        raise ShapeError(
            f"incompatible {what}: dims {a.dims} vs {b.dims}, "
            f"spacing {a.spacing} vs {b.spacing}"
        )
