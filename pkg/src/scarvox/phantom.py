"""Deterministic synthetic phantom: ellipsoidal cavity, wall shell, scar patches.

The cavity is an analytic ellipsoid, the wall the shell between it and an
ellipsoid grown by the wall thickness, and each scar patch an azimuthal
sector of the shell restricted to its outer radial fraction.  Everything is
a closed-form function of the voxel center coordinates plus seeded Gaussian
intensity noise, so tests get exact ground truth (volumes, memberships,
centroids) and bit-reproducible volumes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientVoxelsError, ParameterError, SpecError
from .grid import BinaryMask, ScalarVolume, Spacing

# Intensity model: blood pool brighter than wall, scar hyper-enhanced.
LEVEL_BACKGROUND = 20.0
LEVEL_WALL = 60.0
LEVEL_BLOOD = 100.0
LEVEL_SCAR = 140.0


@dataclass(frozen=True)
class ScarPatch:
    """Azimuthal sector of the wall shell.

    azimuth_center_deg / azimuth_width_deg select directions in the xy-plane;
    thickness_fraction keeps the outer fraction of the shell radially.
    """

    azimuth_center_deg: float
    azimuth_width_deg: float
    thickness_fraction: float


@dataclass(frozen=True)
class PhantomSpec:
    dims: tuple[int, int, int] = (96, 96, 96)
    spacing: Spacing = Spacing(1.0, 1.0, 1.0)
    semi_axes_mm: tuple[float, float, float] = (18.0, 14.0, 11.0)
    center_mm: tuple[float, float, float] | None = None  # None -> grid center
    wall_thickness_mm: float = 2.0
    scar_patches: tuple[ScarPatch, ...] = (
        ScarPatch(0.0, 70.0, 1.0),
        ScarPatch(150.0, 45.0, 0.8),
    )
    noise_sigma: float = 5.0
    seed: int = 7

    def resolved_center(self) -> tuple[float, float, float]:
        if self.center_mm is not None:
            return self.center_mm
        s = self.spacing
        return (
            (self.dims[0] - 1) / 2.0 * s.sx,
            (self.dims[1] - 1) / 2.0 * s.sy,
            (self.dims[2] - 1) / 2.0 * s.sz,
        )

    def validate(self) -> None:
        if min(self.dims) < 8:
            raise SpecError("phantom grid must be at least 8 voxels per axis")
        a, b, c = self.semi_axes_mm
        t = self.wall_thickness_mm
        if t <= 0:
            raise SpecError("wall thickness must be positive")
        if min(a, b, c) <= t:
            raise SpecError("semi-axes must exceed the wall thickness")
        if self.noise_sigma < 0:
            raise SpecError("noise sigma must be non-negative")
        for patch in self.scar_patches:
            if patch.azimuth_width_deg <= 0 or not (0 < patch.thickness_fraction <= 1):
                raise SpecError(f"inconsistent scar patch {patch}")
        cx, cy, cz = self.resolved_center()
        s = self.spacing
        extent = (self.dims[0] - 1) * s.sx, (self.dims[1] - 1) * s.sy, (self.dims[2] - 1) * s.sz
        for center, axis, ext in zip((cx, cy, cz), (a + t, b + t, c + t), extent):
            if center - axis < 0 or center + axis > ext:
                raise SpecError("outer wall surface does not fit inside the grid")


def _wrap_deg(angle: np.ndarray) -> np.ndarray:
    """Wrap angles to (-180, 180]."""
    return (angle + 180.0) % 360.0 - 180.0


def generate(spec: PhantomSpec) -> tuple[ScalarVolume, BinaryMask, BinaryMask, BinaryMask]:
    """Build (intensity, cavity, wall, scar) for the given parameters."""
    spec.validate()
    nx, ny, nz = spec.dims
    s = spec.spacing
    cx, cy, cz = spec.resolved_center()
    a, b, c = spec.semi_axes_mm
    t = spec.wall_thickness_mm

    dx = np.arange(nx, dtype=np.float64)[:, None, None] * s.sx - cx
    dy = np.arange(ny, dtype=np.float64)[None, :, None] * s.sy - cy
    dz = np.arange(nz, dtype=np.float64)[None, None, :] * s.sz - cz

    rho_in = np.sqrt((dx / a) ** 2 + (dy / b) ** 2 + (dz / c) ** 2)
    rho_out = np.sqrt((dx / (a + t)) ** 2 + (dy / (b + t)) ** 2 + (dz / (c + t)) ** 2)

    cavity = rho_in <= 1.0
    wall = (rho_in > 1.0) & (rho_out <= 1.0)

    scar = np.zeros(spec.dims, dtype=bool)
    if spec.scar_patches:
        radius = np.sqrt(dx ** 2 + dy ** 2 + dz ** 2)
        with np.errstate(divide="ignore", invalid="ignore"):
            # Radial shell coordinate: 0 at the inner surface, 1 at the outer.
            r_inner = radius / rho_in
            r_outer = radius / rho_out
            shell_u = (radius - r_inner) / (r_outer - r_inner)
        azimuth = np.degrees(np.arctan2(dy, dx))  # (nx, ny, 1), broadcasts over z
        for patch in spec.scar_patches:
            in_sector = np.abs(_wrap_deg(azimuth - patch.azimuth_center_deg)) <= patch.azimuth_width_deg / 2.0
            in_depth = shell_u >= 1.0 - patch.thickness_fraction
            scar |= wall & in_sector & in_depth

    intensity = np.full(spec.dims, LEVEL_BACKGROUND, dtype=np.float64)
    intensity[cavity] = LEVEL_BLOOD
    intensity[wall] = LEVEL_WALL
    intensity[scar] = LEVEL_SCAR
    if spec.noise_sigma > 0:
        rng = np.random.default_rng(spec.seed)
        intensity = intensity + rng.normal(0.0, spec.noise_sigma, size=spec.dims)

    return (
        ScalarVolume(intensity, s),
        BinaryMask(cavity, s),
        BinaryMask(wall, s),
        BinaryMask(scar, s),
    )


def plant_errors(scar_gt: BinaryMask, cavity: BinaryMask, wall: BinaryMask,
                 fp_in_cavity: int = 0, fp_outside_wall: int = 0,
                 fn_inside_wall: int = 0, seed: int = 0) -> BinaryMask:
    """Corrupt a ground-truth scar into a prediction with exact planted errors.

    The requested counts mirror the anatomical-error numerators: planted
    cavity false positives are a subset of the outside-wall false positives
    (the cavity lies outside the wall), so ``fp_outside_wall`` must be at
    least ``fp_in_cavity``.  False negatives remove ground-truth voxels,
    all of which sit inside the wall.
    """
    if min(fp_in_cavity, fp_outside_wall, fn_inside_wall) < 0:
        raise ParameterError("planted error counts must be non-negative")
    if fp_outside_wall < fp_in_cavity:
        raise ParameterError(
            "fp_outside_wall includes cavity false positives and cannot be smaller "
            "than fp_in_cavity"
        )
    gt = scar_gt.as_bool()
    cav = cavity.as_bool()
    wal = wall.as_bool()
    rng = np.random.default_rng(seed)

    def pick(candidates: np.ndarray, n: int, what: str) -> np.ndarray:
        flat = np.flatnonzero(candidates)
        if flat.size < n:
            raise InsufficientVoxelsError(f"{what}: need {n}, have {flat.size}")
        return rng.choice(flat, size=n, replace=False) if n else np.empty(0, dtype=np.int64)

    fp_elsewhere = fp_outside_wall - fp_in_cavity
    cav_picks = pick(cav & ~gt, fp_in_cavity, "false positives in cavity")
    out_picks = pick(~wal & ~cav & ~gt, fp_elsewhere, "false positives outside wall/cavity")
    fn_picks = pick(gt & wal, fn_inside_wall, "false negatives inside wall")

    pred = gt.copy().ravel()
    pred[cav_picks] = True
    pred[out_picks] = True
    pred[fn_picks] = False
    return BinaryMask(pred.reshape(scar_gt.dims), scar_gt.spacing)
