"""Supervision regions: the wall ROI, the boundary uncertainty band, and their union.

The boundary uncertainty band collects voxels whose wall SDM magnitude is at
most ``tau_band_mm`` (default 3 mm) — the annotation-ambiguous shell around
the wall surface.  The threshold is applied to the raw millimeter SDM, not
the normalized channel: the band width is a physical statement.

The effective supervision region is the union of the wall ROI with the band.
Losses default to it; the plain wall ROI stays selectable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMaskError, ParameterError
from .grid import BinaryMask, ScalarVolume, Spacing, require_compatible
from .morphology import wall_band
from .sdm import DEFAULT_TAU_WALL_MM, wall_sdm

DEFAULT_TAU_BAND_MM = 3.0


@dataclass(frozen=True)
class SupervisionRegions:
    """Wall ROI, boundary uncertainty band, and their union."""

    roi_wall: BinaryMask
    bub: BinaryMask
    effective: BinaryMask
    tau_band_mm: float


def boundary_uncertainty_band(wall_sdm_mm: ScalarVolume, tau_band_mm: float = DEFAULT_TAU_BAND_MM) -> BinaryMask:
    """Voxels within tau_band_mm of the wall surface: |SDM_wall| <= tau."""
    if tau_band_mm <= 0:
        raise ParameterError(f"tau_band_mm must be positive, got {tau_band_mm}")
    return BinaryMask(np.abs(wall_sdm_mm.data) <= tau_band_mm, wall_sdm_mm.spacing)


def effective_region(roi_wall: BinaryMask, bub: BinaryMask) -> BinaryMask:
    """Voxelwise union of the wall ROI and the uncertainty band."""
    require_compatible(roi_wall, bub, "region masks")
    return BinaryMask(roi_wall.as_bool() | bub.as_bool(), roi_wall.spacing)


def build_regions(cavity_pred: BinaryMask, spacing: Spacing | None = None,
                  tau_wall_mm: float = DEFAULT_TAU_WALL_MM,
                  tau_band_mm: float = DEFAULT_TAU_BAND_MM,
                  element: str = "disc") -> SupervisionRegions:
    """Derive all supervision regions from a (predicted) cavity mask.

    The ROI comes from the cavity the upstream model predicted, never from
    ground-truth anatomy, so no label information leaks into supervision.
    """
    if spacing is None:
        spacing = cavity_pred.spacing
    inside = cavity_pred.as_bool()
    if not inside.any() or inside.all():
        raise DegenerateMaskError("cavity mask is empty or fills the grid")
    roi = wall_band(cavity_pred, spacing, tau_wall_mm, element=element)
    band = boundary_uncertainty_band(wall_sdm(roi, spacing), tau_band_mm)
    return SupervisionRegions(
        roi_wall=roi,
        bub=band,
        effective=effective_region(roi, band),
        tau_band_mm=float(tau_band_mm),
    )
