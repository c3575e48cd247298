"""Voxel-grid geometry and supervision toolkit for wall-confined scar segmentation.

The pieces chain into the stage-2 supervision pipeline: a predicted cavity
mask yields cavity/wall signed distance channels, a wall ROI and boundary
uncertainty band, ROI-masked losses with analytic gradients, and the
evaluation metrics for the resulting scar predictions.
"""

from .edt import edt, edt_bruteforce
from .errors import (
    DegenerateMaskError,
    EmptyForegroundError,
    EmptyMaskError,
    EmptyRoiError,
    FormatError,
    InsufficientVoxelsError,
    NonBinaryMaskError,
    OracleSizeError,
    ParameterError,
    ScarvoxError,
    ShapeError,
    SpecError,
)
from .grid import BinaryMask, ScalarVolume, Spacing, masks_compatible, voxel_to_world
from .losses import LossConfig, LossReport, global_dice_loss, roi_dice_loss, roi_weighted_bce, total_loss
from .metrics import MetricsReport, anatomical_errors, assd, case_metrics, centroid_error, dsc
from .morphology import StructuringElement, dilate, disc_element, ellipsoid_element, erode, wall_band, wall_radius
from .phantom import PhantomSpec, ScarPatch, generate, plant_errors
from .regions import SupervisionRegions, boundary_uncertainty_band, build_regions, effective_region
from .sdm import SdmPair, build_sdm_pair, cavity_sdm, clip_normalize, wall_sdm

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "BinaryMask",
    "DegenerateMaskError",
    "EmptyForegroundError",
    "EmptyMaskError",
    "EmptyRoiError",
    "FormatError",
    "InsufficientVoxelsError",
    "LossConfig",
    "LossReport",
    "MetricsReport",
    "NonBinaryMaskError",
    "OracleSizeError",
    "ParameterError",
    "PhantomSpec",
    "ScalarVolume",
    "ScarPatch",
    "ScarvoxError",
    "SdmPair",
    "ShapeError",
    "Spacing",
    "SpecError",
    "StructuringElement",
    "SupervisionRegions",
    "anatomical_errors",
    "assd",
    "boundary_uncertainty_band",
    "build_regions",
    "build_sdm_pair",
    "case_metrics",
    "cavity_sdm",
    "centroid_error",
    "clip_normalize",
    "dilate",
    "disc_element",
    "dsc",
    "edt",
    "edt_bruteforce",
    "effective_region",
    "ellipsoid_element",
    "erode",
    "generate",
    "global_dice_loss",
    "masks_compatible",
    "plant_errors",
    "roi_dice_loss",
    "roi_weighted_bce",
    "total_loss",
    "voxel_to_world",
    "wall_band",
    "wall_radius",
    "wall_sdm",
]
