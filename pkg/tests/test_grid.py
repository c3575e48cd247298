import numpy as np
import pytest

from scarvox import BinaryMask, ScalarVolume, Spacing, masks_compatible, voxel_to_world


def test_voxel_to_world_origin():
    assert voxel_to_world((0, 0, 0), Spacing(0.625, 0.625, 2.5)) == (0.0, 0.0, 0.0)


def test_voxel_to_world_unit_step_scales_by_spacing():
    assert voxel_to_world((1, 0, 0), Spacing(0.625, 0.625, 2.5)) == (0.625, 0.0, 0.0)


def test_voxel_to_world_identity_spacing():
    assert voxel_to_world((2, 3, 1), Spacing(1, 1, 1)) == (2.0, 3.0, 1.0)


def test_voxel_to_world_out_of_range():
    with pytest.raises(IndexError):
        voxel_to_world((5, 0, 0), Spacing(1, 1, 1), dims=(5, 5, 5))
    with pytest.raises(IndexError):
        voxel_to_world((0, -1, 0), Spacing(1, 1, 1), dims=(5, 5, 5))


def test_voxel_to_world_is_linear():
    # Binary-exact spacings make the componentwise identity exact.
    sp = Spacing(0.625, 0.5, 2.5)
    rng = np.random.default_rng(3)
    for _ in range(20):
        a = rng.integers(0, 100, 3)
        b = rng.integers(0, 100, 3)
        left = voxel_to_world(tuple(a + b), sp)
        right = tuple(x + y for x, y in zip(voxel_to_world(tuple(a), sp),
                                            voxel_to_world(tuple(b), sp)))
        assert left == right


def test_masks_compatible_same():
    sp = Spacing(1, 1, 1)
    a = BinaryMask(np.zeros((8, 8, 8), np.uint8), sp)
    b = BinaryMask(np.ones((8, 8, 8), np.uint8), sp)
    assert masks_compatible(a, b)


def test_masks_compatible_dims_mismatch():
    sp = Spacing(1, 1, 1)
    a = BinaryMask(np.zeros((8, 8, 8), np.uint8), sp)
    b = BinaryMask(np.zeros((8, 8, 9), np.uint8), sp)
    assert not masks_compatible(a, b)


def test_masks_compatible_spacing_within_tolerance():
    a = BinaryMask(np.zeros((8, 8, 8), np.uint8), Spacing(1.0, 1.0, 1.0))
    b = BinaryMask(np.zeros((8, 8, 8), np.uint8), Spacing(1.0000001, 1.0, 1.0))
    assert masks_compatible(a, b)
    c = BinaryMask(np.zeros((8, 8, 8), np.uint8), Spacing(1.00001, 1.0, 1.0))
    assert not masks_compatible(a, c)


def test_flat_buffer_round_trip():
    rng = np.random.default_rng(11)
    flat = rng.normal(size=4 * 5 * 6)
    vol = ScalarVolume(flat.reshape(4, 5, 6), Spacing(1, 1, 1))
    for idx in [(0, 0, 0), (3, 4, 5), (2, 1, 3)]:
        i, j, k = idx
        assert vol.data[idx] == flat[i * 30 + j * 6 + k]
    assert np.array_equal(vol.data.ravel(), flat)


def test_volumes_are_immutable():
    vol = ScalarVolume(np.zeros((2, 2, 2)), Spacing(1, 1, 1))
    mask = BinaryMask(np.zeros((2, 2, 2), np.uint8), Spacing(1, 1, 1))
    with pytest.raises(ValueError):
        vol.data[0, 0, 0] = 1.0
    with pytest.raises(ValueError):
        mask.data[0, 0, 0] = 1


def test_mask_rejects_non_binary_values():
    with pytest.raises(ValueError):
        BinaryMask(np.full((2, 2, 2), 3, np.uint8), Spacing(1, 1, 1))


def test_volume_rejects_non_finite():
    data = np.zeros((2, 2, 2))
    data[0, 0, 0] = np.nan
    with pytest.raises(ValueError):
        ScalarVolume(data, Spacing(1, 1, 1))


def test_spacing_must_be_positive():
    with pytest.raises(ValueError):
        Spacing(0.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        Spacing(1.0, -2.0, 1.0)


def test_in_plane_spacing():
    assert Spacing(0.625, 0.7, 2.5).in_plane == 0.625
    assert Spacing(0.8, 0.6, 2.5).in_plane == 0.6
