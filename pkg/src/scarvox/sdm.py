"""Signed distance maps for the cavity and wall band, with clip-normalization.

Sign convention (everywhere in this toolkit): positive strictly inside the
region, negative strictly outside.  The signed value at a voxel is its
distance to the opposite set, so no voxel is ever exactly zero; the boundary
lives in the sign change between adjacent voxels.

Both maps are clipped to a maximum magnitude ``c`` (default 12 mm) and
divided by ``c``, giving the [-1, 1] channels consumed downstream.  Raw
millimeter maps are retained because the boundary-uncertainty threshold is
a physical width.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .edt import edt
from .errors import DegenerateMaskError, ParameterError
from .grid import BinaryMask, ScalarVolume, Spacing
from .morphology import wall_band

DEFAULT_CLIP_MM = 12.0
DEFAULT_TAU_WALL_MM = 2.0


@dataclass(frozen=True)
class SdmPair:
    """Normalized cavity + wall SDM channels plus their raw millimeter maps."""

    cavity_sdm: ScalarVolume
    wall_sdm: ScalarVolume
    clip_mm: float
    cavity_sdm_mm: ScalarVolume
    wall_sdm_mm: ScalarVolume
    wall: BinaryMask


def _signed_distance(region: BinaryMask, spacing: Spacing, what: str) -> ScalarVolume:
    inside = region.data.astype(bool)
    if not inside.any() or inside.all():
        raise DegenerateMaskError(f"{what} mask is empty or fills the grid")
    dist_to_region = edt(region, spacing).data
    dist_to_complement = edt(region.complement(), spacing).data
    signed = np.where(inside, dist_to_complement, -dist_to_region)
    return ScalarVolume(signed, spacing)


def cavity_sdm(cavity: BinaryMask, spacing: Spacing | None = None) -> ScalarVolume:
    """Signed distance to the cavity boundary in mm, positive inside the cavity."""
    return _signed_distance(cavity, spacing or cavity.spacing, "cavity")


def wall_sdm(wall: BinaryMask, spacing: Spacing | None = None) -> ScalarVolume:
    """Signed distance to the wall-band boundary in mm, positive inside the band."""
    return _signed_distance(wall, spacing or wall.spacing, "wall")


def clip_normalize(sdm_mm: ScalarVolume, clip_mm: float = DEFAULT_CLIP_MM) -> ScalarVolume:
    """clip(v, -c, c) / c, mapping millimeters onto [-1, 1]."""
    if clip_mm <= 0:
        raise ParameterError(f"clip_mm must be positive, got {clip_mm}")
    return ScalarVolume(np.clip(sdm_mm.data, -clip_mm, clip_mm) / clip_mm, sdm_mm.spacing)


def build_sdm_pair(cavity: BinaryMask, spacing: Spacing | None = None,
                   tau_wall_mm: float = DEFAULT_TAU_WALL_MM,
                   clip_mm: float = DEFAULT_CLIP_MM,
                   element: str = "disc") -> SdmPair:
    """Derive the wall band from the cavity and compute both normalized SDMs.

    Deterministic: identical inputs give bit-identical outputs.
    """
    if spacing is None:
        spacing = cavity.spacing
    cav_mm = cavity_sdm(cavity, spacing)
    wall = wall_band(cavity, spacing, tau_wall_mm, element=element)
    wall_mm = wall_sdm(wall, spacing)
    return SdmPair(
        cavity_sdm=clip_normalize(cav_mm, clip_mm),
        wall_sdm=clip_normalize(wall_mm, clip_mm),
        clip_mm=float(clip_mm),
        cavity_sdm_mm=cav_mm,
        wall_sdm_mm=wall_mm,
        wall=wall,
    )
