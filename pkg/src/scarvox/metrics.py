"""Evaluation metrics: Dice overlap, surface distance, centroid error, and
anatomical false-positive/false-negative rates.

Surface definition, fixed so ASSD is reproducible bit-for-bit: a surface
voxel is a foreground voxel with at least one six-connected background
neighbor, where the grid border counts as background.

Rate denominators: both FP rates normalize by the number of predicted
voxels, the FN rate by the number of ground-truth voxels, making the three
percentages independently interpretable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .edt import edt
from .errors import EmptyMaskError
from .grid import BinaryMask, Spacing, require_compatible


@dataclass(frozen=True)
class MetricsReport:
    """Per-case evaluation; None marks a metric whose denominator was degenerate."""

    dsc: float
    assd_mm: float | None
    centroid_error_mm: float | None
    fp_in_cavity_pct: float | None = None
    fp_outside_wall_pct: float | None = None
    fn_inside_wall_pct: float | None = None

    def scalars(self) -> dict:
        return {
            "dsc": self.dsc,
            "assd_mm": self.assd_mm,
            "centroid_error_mm": self.centroid_error_mm,
            "fp_in_cavity_pct": self.fp_in_cavity_pct,
            "fp_outside_wall_pct": self.fp_outside_wall_pct,
            "fn_inside_wall_pct": self.fn_inside_wall_pct,
        }


def dsc(pred: BinaryMask, gt: BinaryMask) -> float:
    """Dice similarity coefficient; two empty masks agree perfectly (1.0)."""
    require_compatible(pred, gt, "pred/gt")
    p = pred.as_bool()
    g = gt.as_bool()
    size = int(p.sum()) + int(g.sum())
    if size == 0:
        return 1.0
    return 2.0 * int((p & g).sum()) / size


def surface_voxels(mask: BinaryMask) -> np.ndarray:
    """Boolean array of surface voxels (6-connectivity, border-as-background)."""
    m = mask.as_bool()
    padded = np.pad(m, 1)
    core = padded[1:-1, 1:-1, 1:-1]
    has_bg_neighbor = (
        ~padded[:-2, 1:-1, 1:-1] | ~padded[2:, 1:-1, 1:-1]
        | ~padded[1:-1, :-2, 1:-1] | ~padded[1:-1, 2:, 1:-1]
        | ~padded[1:-1, 1:-1, :-2] | ~padded[1:-1, 1:-1, 2:]
    )
    return core & has_bg_neighbor


def assd(pred: BinaryMask, gt: BinaryMask, spacing: Spacing | None = None,
         roi: BinaryMask | None = None) -> float:
    """Average symmetric surface distance in millimeters.

    Sum of nearest-surface distances in both directions, divided by the
    total surface voxel count.  Distances to the opposite surface come from
    the exact anisotropic EDT sampled at surface voxels.  When ``roi`` is
    given, both masks are intersected with it first (wall-restricted mode);
    the default compares whole volumes.
    """
    require_compatible(pred, gt, "pred/gt")
    if spacing is None:
        spacing = pred.spacing
    if roi is not None:
        require_compatible(pred, roi, "pred/roi")
        pred = BinaryMask(pred.as_bool() & roi.as_bool(), spacing)
        gt = BinaryMask(gt.as_bool() & roi.as_bool(), spacing)
    if not pred.data.any() or not gt.data.any():
        raise EmptyMaskError("ASSD needs non-empty prediction and ground truth")
    surf_p = surface_voxels(pred)
    surf_g = surface_voxels(gt)
    dist_to_g = edt(BinaryMask(surf_g, spacing), spacing).data
    dist_to_p = edt(BinaryMask(surf_p, spacing), spacing).data
    total = float(dist_to_g[surf_p].sum()) + float(dist_to_p[surf_g].sum())
    return total / (int(surf_p.sum()) + int(surf_g.sum()))


def centroid_mm(mask: BinaryMask, spacing: Spacing | None = None) -> tuple[float, float, float]:
    """Unweighted mean of foreground voxel centers, in world millimeters."""
    if spacing is None:
        spacing = mask.spacing
    idx = np.argwhere(mask.data)
    if idx.shape[0] == 0:
        raise EmptyMaskError("centroid of an empty mask")
    mean = idx.mean(axis=0) * spacing.as_array()
    return (float(mean[0]), float(mean[1]), float(mean[2]))


def centroid_error(pred: BinaryMask, gt: BinaryMask, spacing: Spacing | None = None) -> float:
    """Euclidean distance between predicted and ground-truth centroids (mm)."""
    require_compatible(pred, gt, "pred/gt")
    if spacing is None:
        spacing = pred.spacing
    a = centroid_mm(pred, spacing)
    b = centroid_mm(gt, spacing)
    return math.dist(a, b)


def anatomical_errors(pred: BinaryMask, gt: BinaryMask, cavity: BinaryMask,
                      wall: BinaryMask) -> tuple[float | None, float | None, float | None]:
    """(FP-in-cavity %, FP-outside-wall %, FN-inside-wall %).

    FP rates are percentages of all predicted voxels, the FN rate of all
    ground-truth voxels; a rate whose denominator is zero comes back None.
    """
    require_compatible(pred, gt, "pred/gt")
    require_compatible(pred, cavity, "pred/cavity")
    require_compatible(pred, wall, "pred/wall")
    p = pred.as_bool()
    g = gt.as_bool()
    fp = p & ~g
    fn = ~p & g
    n_pred = int(p.sum())
    n_gt = int(g.sum())
    fp_in_cavity = 100.0 * int((fp & cavity.as_bool()).sum()) / n_pred if n_pred else None
    fp_outside_wall = 100.0 * int((fp & ~wall.as_bool()).sum()) / n_pred if n_pred else None
    fn_inside_wall = 100.0 * int((fn & wall.as_bool()).sum()) / n_gt if n_gt else None
    return fp_in_cavity, fp_outside_wall, fn_inside_wall


def case_metrics(pred: BinaryMask, gt: BinaryMask, spacing: Spacing | None = None,
                 cavity: BinaryMask | None = None,
                 wall: BinaryMask | None = None) -> MetricsReport:
    """Full per-case report; degenerate metrics become None instead of raising."""
    require_compatible(pred, gt, "pred/gt")
    if spacing is None:
        spacing = pred.spacing
    overlap = dsc(pred, gt)
    try:
        surface = assd(pred, gt, spacing)
    except EmptyMaskError:
        surface = None
    try:
        cen = centroid_error(pred, gt, spacing)
    except EmptyMaskError:
        cen = None
    fp_cav = fp_out = fn_in = None
    if cavity is not None and wall is not None:
        fp_cav, fp_out, fn_in = anatomical_errors(pred, gt, cavity, wall)
    return MetricsReport(
        dsc=overlap,
        assd_mm=surface,
        centroid_error_mm=cen,
        fp_in_cavity_pct=fp_cav,
        fp_outside_wall_pct=fp_out,
        fn_inside_wall_pct=fn_in,
    )
