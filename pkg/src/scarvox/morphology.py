"""Spacing-aware binary morphology and the symmetric wall-band construction.

The wall band around a cavity is the XOR of the dilated and eroded cavity
mask, using a structuring element whose voxel radius follows the in-plane
spacing: r = max(1, round(tau_mm / min(sx, sy))).  Rounding is half away
from zero (2.5 -> 3), not banker's rounding.

Border conventions are fixed so that the dilation/erosion duality
``erode(m) == ~dilate(~m)`` holds voxel-exactly: dilation treats out-of-grid
neighbors as background, erosion ignores them (its all-quantifier runs over
in-bounds offsets only).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyForegroundError, ParameterError
from .grid import BinaryMask, Spacing


@dataclass(frozen=True)
class StructuringElement:
    """Symmetric voxel-offset neighborhood containing the zero offset."""

    radius_voxels: int
    offsets: tuple[tuple[int, int, int], ...]

    def __post_init__(self):
        if self.radius_voxels < 1:
            raise ParameterError("structuring element radius must be >= 1")
        offs = set(self.offsets)
        if (0, 0, 0) not in offs:
            raise ValueError("structuring element must contain the zero offset")
        for o in offs:
            if (-o[0], -o[1], -o[2]) not in offs:
                raise ValueError(f"structuring element not symmetric: {o} lacks its mirror")


def disc_element(radius_voxels: int) -> StructuringElement:
    """In-plane Euclidean disc of the given voxel radius, no through-plane extent.

    This is the default element for wall bands: with strongly anisotropic
    slices, extending the element along z would make the band far thicker
    through-plane than the intended physical wall thickness.
    """
    r = int(radius_voxels)
    if r < 1:
        raise ParameterError("disc radius must be >= 1")
    offsets = [
        (dx, dy, 0)
        for dx in range(-r, r + 1)
        for dy in range(-r, r + 1)
        if dx * dx + dy * dy <= r * r
    ]
    return StructuringElement(r, tuple(offsets))


def ellipsoid_element(spacing: Spacing, tau_mm: float) -> StructuringElement:
    """Anisotropic 3-D element: all offsets o with ||o * s||_2 <= tau_mm.

    Provided for sensitivity checks against the in-plane disc default.
    """
    if tau_mm <= 0:
        raise ParameterError("tau_mm must be positive")
    rx = int(math.floor(tau_mm / spacing.sx))
    ry = int(math.floor(tau_mm / spacing.sy))
    rz = int(math.floor(tau_mm / spacing.sz))
    tau_sq = tau_mm * tau_mm
    offsets = [
        (dx, dy, dz)
        for dx in range(-rx, rx + 1)
        for dy in range(-ry, ry + 1)
        for dz in range(-rz, rz + 1)
        if (dx * spacing.sx) ** 2 + (dy * spacing.sy) ** 2 + (dz * spacing.sz) ** 2 <= tau_sq
    ]
    return StructuringElement(max(1, rx, ry, rz), tuple(offsets))


def wall_radius(spacing: Spacing, tau_wall_mm: float) -> int:
    """Element radius in voxels for a wall of the given physical thickness."""
    if tau_wall_mm <= 0:
        raise ParameterError(f"tau_wall_mm must be positive, got {tau_wall_mm}")
    return max(1, int(math.floor(tau_wall_mm / spacing.in_plane + 0.5)))


def _axis_slices(n: int, o: int) -> tuple[slice, slice]:
    """(dst, src) slices so that dst[i] aligns with src[i + o]."""
    if o >= 0:
        return slice(0, n - o), slice(o, n)
    return slice(-o, n), slice(0, n + o)


def dilate(mask: BinaryMask, se: StructuringElement) -> BinaryMask:
    """Voxel is set iff any element offset lands on a set voxel (border = background)."""
    m = mask.as_bool()
    out = np.zeros(mask.dims, dtype=bool)
    for ox, oy, oz in se.offsets:
        (dx, sx), (dy, sy), (dz, sz) = (
            _axis_slices(mask.dims[0], ox),
            _axis_slices(mask.dims[1], oy),
            _axis_slices(mask.dims[2], oz),
        )
        out[dx, dy, dz] |= m[sx, sy, sz]
    return BinaryMask(out, mask.spacing)


def erode(mask: BinaryMask, se: StructuringElement) -> BinaryMask:
    """Voxel stays set iff every in-bounds element offset lands on a set voxel."""
    m = mask.as_bool()
    out = np.ones(mask.dims, dtype=bool)
    for ox, oy, oz in se.offsets:
        (dx, sx), (dy, sy), (dz, sz) = (
            _axis_slices(mask.dims[0], ox),
            _axis_slices(mask.dims[1], oy),
            _axis_slices(mask.dims[2], oz),
        )
        out[dx, dy, dz] &= m[sx, sy, sz]
    return BinaryMask(out, mask.spacing)


def wall_band(cavity: BinaryMask, spacing: Spacing | None = None,
              tau_wall_mm: float = 2.0, element: str = "disc") -> BinaryMask:
    """Closed band straddling the cavity boundary: dilate(cavity) XOR erode(cavity).

    ``element`` selects the in-plane "disc" default or the anisotropic
    "ellipsoid" variant.
    """
    if spacing is None:
        spacing = cavity.spacing
    if not cavity.data.any():
        raise EmptyForegroundError("wall band of an empty cavity")
    if element == "disc":
        se = disc_element(wall_radius(spacing, tau_wall_mm))
    elif element == "ellipsoid":
        se = ellipsoid_element(spacing, tau_wall_mm)
    else:
        raise ParameterError(f"unknown structuring element kind {element!r}")
    grown = dilate(cavity, se).as_bool()
    shrunk = erode(cavity, se).as_bool()
    return BinaryMask(grown ^ shrunk, cavity.spacing)
