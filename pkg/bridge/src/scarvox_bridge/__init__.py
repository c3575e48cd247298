"""Thin array-level binding of the scarvox kernels for training loops.

Exactly three entry points, all plain-ndarray in / plain-ndarray out so a
host framework can wrap them as a custom differentiable function without
this package knowing anything about autodiff:

* ``bridge_sdm``     cavity mask -> normalized (cavity, wall) SDM channels
* ``bridge_regions`` cavity mask -> wall ROI / uncertainty band / union masks
* ``bridge_loss``    logits + labels + ROI -> scalar report and d(total)/d(logits)

Inputs are validated (3-D, correct dtype family) before dispatch; masks and
logits are normalized to contiguous buffers with at most one copy.  Returned
arrays are read-only views of the library's outputs — copy them if the host
needs to mutate.  Calls are reentrant: no state lives in this module, and
the heavy kernels release the interpreter lock inside numpy/numba.

Numerics are identical to the library (and therefore to the CLI): the code
paths are the same.
"""

from __future__ import annotations

import numpy as np

import scarvox
from scarvox import BinaryMask, LossConfig, ScalarVolume, Spacing
from scarvox.regions import build_regions as _build_regions
from scarvox.sdm import build_sdm_pair as _build_sdm_pair
from scarvox.losses import total_loss as _total_loss

__version__ = scarvox.__version__

__all__ = ["bridge_sdm", "bridge_regions", "bridge_loss", "__version__"]

_CONFIG_KEYS = {"lambda_dice", "lambda_bce", "alpha", "w_max", "epsilon", "region_mode"}


def _as_spacing(spacing) -> Spacing:
    if isinstance(spacing, Spacing):
        return spacing
    sx, sy, sz = (float(v) for v in spacing)
    return Spacing(sx, sy, sz)


def _as_mask(array, spacing: Spacing, name: str) -> BinaryMask:
    arr = np.asarray(array)
    if arr.ndim != 3:
        raise ValueError(f"{name} must be a 3-D array, got shape {arr.shape}")
    if arr.dtype not in (np.uint8, np.bool_):
        raise TypeError(f"{name} must be uint8 or bool, got dtype {arr.dtype}")
    return BinaryMask(arr, spacing)


def _as_logits(array, spacing: Spacing) -> ScalarVolume:
    arr = np.asarray(array)
    if arr.ndim != 3:
        raise ValueError(f"logits must be a 3-D array, got shape {arr.shape}")
    if not np.issubdtype(arr.dtype, np.floating):
        raise TypeError(f"logits must be floating point, got dtype {arr.dtype}")
    return ScalarVolume(arr.astype(np.float64, copy=False), spacing)


def bridge_sdm(cavity_array, spacing, tau_wall_mm: float = 2.0,
               clip_mm: float = 12.0) -> tuple[np.ndarray, np.ndarray]:
    """Normalized (cavity_sdm, wall_sdm) channels for a binary cavity mask."""
    sp = _as_spacing(spacing)
    cavity = _as_mask(cavity_array, sp, "cavity")
    pair = _build_sdm_pair(cavity, tau_wall_mm=tau_wall_mm, clip_mm=clip_mm)
    return pair.cavity_sdm.data, pair.wall_sdm.data


def bridge_regions(cavity_array, spacing, tau_wall_mm: float = 2.0,
                   tau_band_mm: float = 3.0) -> dict:
    """Supervision masks {roi_wall, bub, effective} as uint8 arrays."""
    sp = _as_spacing(spacing)
    cavity = _as_mask(cavity_array, sp, "cavity")
    regs = _build_regions(cavity, tau_wall_mm=tau_wall_mm, tau_band_mm=tau_band_mm)
    return {
        "roi_wall": regs.roi_wall.data,
        "bub": regs.bub.data,
        "effective": regs.effective.data,
    }


def bridge_loss(logits_array, gt_array, roi_array, config: dict | None = None,
                spacing=(1.0, 1.0, 1.0), want_grad: bool = True) -> dict:
    """Loss report for one volume; ``grad`` is d(total)/d(logits).

    ``config`` may override any LossConfig field (lambda_dice, lambda_bce,
    alpha, w_max, epsilon, region_mode); unknown keys are rejected.  The
    gradient treats the adaptive class weight as a constant of the labels,
    so the host can plug ``grad`` straight into its backward hook.
    """
    sp = _as_spacing(spacing)
    logits = _as_logits(logits_array, sp)
    gt = _as_mask(gt_array, sp, "gt")
    roi = _as_mask(roi_array, sp, "roi")
    config = dict(config or {})
    unknown = set(config) - _CONFIG_KEYS
    if unknown:
        raise ValueError(f"unknown loss config keys: {sorted(unknown)}")
    cfg = LossConfig(**config)
    report = _total_loss(logits, gt, roi, cfg, with_grad=want_grad)
    out = report.scalars()
    if want_grad:
        out["grad"] = report.grad_logits.data
    return out
