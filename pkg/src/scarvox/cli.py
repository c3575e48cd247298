"""Command-line interface.

Subcommands: phantom, sdm, wallband, bub, loss, metrics, pipeline.

All scalar results go to stdout as JSON with a fixed key order, floats
rounded to 9 significant digits, and a ``schema: 1`` version field, so
identical inputs always produce identical text.  Volumes are written
through a staging step: on any error nothing is left behind.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import losses, metrics, nifti, phantom, regions, sdm
from .errors import ScarvoxError
from .grid import BinaryMask, ScalarVolume, Spacing

SCHEMA_VERSION = 1
THREADS_ENV = "SCARVOX_NUM_THREADS"


class _Parser(argparse.ArgumentParser):
    """argparse exits with code 2 on usage errors; the CLI contract wants 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _sig9(value):
    """Round floats to 9 significant digits for stable JSON."""
    if isinstance(value, float):
        return float(f"{value:.9g}")
    if isinstance(value, dict):
        return {k: _sig9(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_sig9(v) for v in value]
    return value


def emit_json(payload: dict, stream=None) -> str:
    text = json.dumps(_sig9(payload), indent=2)
    print(text, file=stream or sys.stdout)
    return text


class OutputStager:
    """Write outputs under temporary names; commit renames, abort removes."""

    def __init__(self, out_dir: Path):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self._staged: list[tuple[Path, Path]] = []

    def stage(self, name: str) -> Path:
        tmp = self.out_dir / (name + ".part")
        self._staged.append((tmp, self.out_dir / name))
        return tmp

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            for tmp, final in self._staged:
                tmp.replace(final)
        else:
            for tmp, _ in self._staged:
                tmp.unlink(missing_ok=True)
        return False


def _read_mask(path: str, binarize: bool = False) -> BinaryMask:
    vol = nifti.read_volume(path, binarize=binarize)
    if not isinstance(vol, BinaryMask):
        raise ScarvoxError(f"{path}: expected a uint8 binary mask")
    return vol


def _read_scalar(path: str) -> ScalarVolume:
    vol = nifti.read_volume(path)
    if isinstance(vol, BinaryMask):
        vol = ScalarVolume(vol.data.astype(np.float64), vol.spacing)
    return vol


def _loss_config(args) -> losses.LossConfig:
    return losses.LossConfig(
        lambda_dice=args.lambda_dice,
        lambda_bce=args.lambda_bce,
        alpha=args.alpha,
        w_max=args.w_max,
        epsilon=args.eps,
        region_mode="wall" if args.region == "wall" else "effective",
    )


def _add_geometry_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tau-wall", type=float, default=2.0, metavar="MM",
                   help="wall band physical thickness (default 2)")
    p.add_argument("--se", choices=("disc", "ellipsoid"), default="disc",
                   help="structuring element shape (default disc)")


def _add_loss_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lambda-dice", type=float, default=1.0)
    p.add_argument("--lambda-bce", type=float, default=2.0)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--w-max", type=float, default=10.0)
    p.add_argument("--eps", type=float, default=1e-5)
    p.add_argument("--region", choices=("wall", "effective"), default="effective",
                   help="loss region: plain wall ROI or wall union uncertainty band")


# --- subcommand handlers ----------------------------------------------------

def cmd_phantom(args) -> int:
    patches = tuple(
        phantom.ScarPatch(*vals) for vals in (args.scar_patch or [])
    ) or phantom.PhantomSpec.__dataclass_fields__["scar_patches"].default
    spec_obj = phantom.PhantomSpec(
        dims=tuple(args.dims),
        spacing=Spacing(*args.spacing),
        semi_axes_mm=tuple(args.semi_axes),
        center_mm=tuple(args.center) if args.center else None,
        wall_thickness_mm=args.wall_thickness,
        scar_patches=patches,
        noise_sigma=args.noise_sigma,
        seed=args.seed,
    )
    intensity, cavity, wall, scar = phantom.generate(spec_obj)
    if args.format == "raw":
        with OutputStager(Path(args.out_dir)) as stager:
            for name, vol in (("intensity", intensity), ("cavity", cavity),
                              ("wall", wall), ("scar", scar)):
                nifti.write_rawvol(stager.stage(f"{name}.rawvol"), vol)
        emit_json({"schema": SCHEMA_VERSION, "format": "raw", "seed": spec_obj.seed})
        return 0
    sidecar = {
        "schema": SCHEMA_VERSION,
        "dims": list(spec_obj.dims),
        "spacing": [spec_obj.spacing.sx, spec_obj.spacing.sy, spec_obj.spacing.sz],
        "semi_axes_mm": list(spec_obj.semi_axes_mm),
        "center_mm": list(spec_obj.resolved_center()),
        "wall_thickness_mm": spec_obj.wall_thickness_mm,
        "scar_patches": [
            [p.azimuth_center_deg, p.azimuth_width_deg, p.thickness_fraction]
            for p in spec_obj.scar_patches
        ],
        "noise_sigma": spec_obj.noise_sigma,
        "seed": spec_obj.seed,
    }
    with OutputStager(Path(args.out_dir)) as stager:
        nifti.write_volume(stager.stage("intensity.nii.gz"), intensity)
        nifti.write_volume(stager.stage("cavity.nii.gz"), cavity)
        nifti.write_volume(stager.stage("wall.nii.gz"), wall)
        nifti.write_volume(stager.stage("scar.nii.gz"), scar)
        stager.stage("phantom.json").write_text(json.dumps(_sig9(sidecar), indent=2) + "\n")
    emit_json(sidecar)
    return 0


def cmd_sdm(args) -> int:
    cavity = _read_mask(args.cavity, binarize=args.binarize)
    affine = nifti.read_affine(args.cavity)
    pair = sdm.build_sdm_pair(cavity, tau_wall_mm=args.tau_wall,
                              clip_mm=args.clip, element=args.se)
    written = {}
    with OutputStager(Path(args.out_dir)) as stager:
        nifti.write_volume(stager.stage("cavity_sdm.nii.gz"), pair.cavity_sdm, affine)
        nifti.write_volume(stager.stage("wall_sdm.nii.gz"), pair.wall_sdm, affine)
        written = {"cavity_sdm": "cavity_sdm.nii.gz", "wall_sdm": "wall_sdm.nii.gz"}
        if args.save_raw:
            nifti.write_volume(stager.stage("cavity_sdm_mm.nii.gz"), pair.cavity_sdm_mm, affine)
            nifti.write_volume(stager.stage("wall_sdm_mm.nii.gz"), pair.wall_sdm_mm, affine)
            written["cavity_sdm_mm"] = "cavity_sdm_mm.nii.gz"
            written["wall_sdm_mm"] = "wall_sdm_mm.nii.gz"
    emit_json({
        "schema": SCHEMA_VERSION,
        "tau_wall_mm": args.tau_wall,
        "clip_mm": args.clip,
        "element": args.se,
        "outputs": written,
    })
    return 0


def cmd_wallband(args) -> int:
    from .morphology import wall_band

    cavity = _read_mask(args.cavity, binarize=args.binarize)
    affine = nifti.read_affine(args.cavity)
    band = wall_band(cavity, tau_wall_mm=args.tau_wall, element=args.se)
    with OutputStager(Path(args.out_dir)) as stager:
        nifti.write_volume(stager.stage("wall.nii.gz"), band, affine)
    emit_json({
        "schema": SCHEMA_VERSION,
        "tau_wall_mm": args.tau_wall,
        "element": args.se,
        "wall_voxels": band.count(),
        "outputs": {"wall": "wall.nii.gz"},
    })
    return 0


def cmd_bub(args) -> int:
    cavity = _read_mask(args.cavity, binarize=args.binarize)
    affine = nifti.read_affine(args.cavity)
    regs = regions.build_regions(cavity, tau_wall_mm=args.tau_wall,
                                 tau_band_mm=args.tau_band, element=args.se)
    with OutputStager(Path(args.out_dir)) as stager:
        nifti.write_volume(stager.stage("roi_wall.nii.gz"), regs.roi_wall, affine)
        nifti.write_volume(stager.stage("bub.nii.gz"), regs.bub, affine)
        nifti.write_volume(stager.stage("effective.nii.gz"), regs.effective, affine)
    emit_json({
        "schema": SCHEMA_VERSION,
        "tau_wall_mm": args.tau_wall,
        "tau_band_mm": args.tau_band,
        "element": args.se,
        "roi_wall_voxels": regs.roi_wall.count(),
        "bub_voxels": regs.bub.count(),
        "effective_voxels": regs.effective.count(),
        "outputs": {"roi_wall": "roi_wall.nii.gz", "bub": "bub.nii.gz",
                    "effective": "effective.nii.gz"},
    })
    return 0


def cmd_loss(args) -> int:
    logits = _read_scalar(args.logits)
    gt = _read_mask(args.gt, binarize=args.binarize)
    roi = _read_mask(args.roi)
    cfg = _loss_config(args)
    report = losses.total_loss(logits, gt, roi, cfg, with_grad=args.grad_out is not None)
    if args.grad_out is not None:
        out = Path(args.grad_out)
        with OutputStager(out.parent) as stager:
            nifti.write_volume(stager.stage(out.name), report.grad_logits,
                               nifti.read_affine(args.logits))
    emit_json({"schema": SCHEMA_VERSION, **report.scalars()})
    return 0


def _metric_payload(report: metrics.MetricsReport) -> dict:
    return {"schema": SCHEMA_VERSION, **report.scalars()}


def _run_case(case: dict) -> metrics.MetricsReport:
    pred = _read_mask(case["pred"])
    gt = _read_mask(case["gt"])
    cavity = _read_mask(case["cavity"]) if case.get("cavity") else None
    wall = _read_mask(case["wall"]) if case.get("wall") else None
    return metrics.case_metrics(pred, gt, cavity=cavity, wall=wall)


def cmd_metrics(args) -> int:
    if args.batch:
        manifest = json.loads(Path(args.batch).read_text())
        if not isinstance(manifest, list):
            raise ScarvoxError(f"{args.batch}: batch manifest must be a JSON list")
        workers = int(os.environ.get(THREADS_ENV, "1"))
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                reports = list(pool.map(_run_case, manifest))
        else:
            reports = [_run_case(case) for case in manifest]
        fields = list(reports[0].scalars()) if reports else []
        aggregate = {}
        for name in fields:
            values = [r.scalars()[name] for r in reports if r.scalars()[name] is not None]
            aggregate[name] = {
                "mean": float(np.mean(values)) if values else None,
                "sd": float(np.std(values, ddof=1)) if len(values) > 1 else None,
                "n": len(values),
            }
        emit_json({
            "schema": SCHEMA_VERSION,
            "cases": [r.scalars() for r in reports],
            "aggregate": aggregate,
        })
        return 0

    pred = _read_mask(args.pred)
    gt = _read_mask(args.gt, binarize=args.binarize)
    cavity = _read_mask(args.cavity) if args.cavity else None
    wall = _read_mask(args.wall) if args.wall else None
    report = metrics.case_metrics(pred, gt, cavity=cavity, wall=wall)
    emit_json(_metric_payload(report))
    return 0


def cmd_pipeline(args) -> int:
    cavity = _read_mask(args.cavity, binarize=args.binarize)
    affine = nifti.read_affine(args.cavity)
    pair = sdm.build_sdm_pair(cavity, tau_wall_mm=args.tau_wall,
                              clip_mm=args.clip, element=args.se)
    bub = regions.boundary_uncertainty_band(pair.wall_sdm_mm, args.tau_band)
    effective = regions.effective_region(pair.wall, bub)

    manifest = {
        "schema": SCHEMA_VERSION,
        "parameters": {
            "tau_wall_mm": args.tau_wall,
            "tau_band_mm": args.tau_band,
            "clip_mm": args.clip,
            "element": args.se,
            "region": args.region,
        },
        "outputs": {
            "cavity_sdm": "cavity_sdm.nii.gz",
            "wall_sdm": "wall_sdm.nii.gz",
            "roi_wall": "roi_wall.nii.gz",
            "bub": "bub.nii.gz",
            "effective": "effective.nii.gz",
        },
        "region_voxels": {
            "roi_wall": pair.wall.count(),
            "bub": bub.count(),
            "effective": effective.count(),
        },
    }

    loss_payload = None
    metrics_payload = None
    if args.pred and args.gt:
        pred_vol = nifti.read_volume(args.pred)
        gt = _read_mask(args.gt, binarize=args.binarize)
        roi = pair.wall if args.region == "wall" else effective
        if isinstance(pred_vol, ScalarVolume):
            cfg = _loss_config(args)
            report = losses.total_loss(pred_vol, gt, roi, cfg)
            loss_payload = report.scalars()
            pred_mask = BinaryMask(pred_vol.data >= 0.0, pred_vol.spacing)
        else:
            pred_mask = pred_vol
        metrics_payload = metrics.case_metrics(
            pred_mask, gt, cavity=cavity, wall=pair.wall).scalars()
    if loss_payload is not None:
        manifest["loss"] = loss_payload
    if metrics_payload is not None:
        manifest["metrics"] = metrics_payload

    with OutputStager(Path(args.out_dir)) as stager:
        nifti.write_volume(stager.stage("cavity_sdm.nii.gz"), pair.cavity_sdm, affine)
        nifti.write_volume(stager.stage("wall_sdm.nii.gz"), pair.wall_sdm, affine)
        nifti.write_volume(stager.stage("roi_wall.nii.gz"), pair.wall, affine)
        nifti.write_volume(stager.stage("bub.nii.gz"), bub, affine)
        nifti.write_volume(stager.stage("effective.nii.gz"), effective, affine)
        stager.stage("manifest.json").write_text(json.dumps(_sig9(manifest), indent=2) + "\n")
    emit_json(manifest)
    return 0


# --- parser -----------------------------------------------------------------

def _csv(cast, n=None):
    def parse(text: str):
        parts = [cast(p) for p in text.split(",")]
        if n is not None and len(parts) != n:
            raise argparse.ArgumentTypeError(f"expected {n} comma-separated values")
        return parts
    return parse


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="scarvox",
                     description="Voxel geometry and supervision toolkit for wall-confined scar segmentation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phantom", help="generate a synthetic cavity/wall/scar volume set")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--dims", type=_csv(int, 3), default=[96, 96, 96])
    p.add_argument("--spacing", type=_csv(float, 3), default=[1.0, 1.0, 1.0])
    p.add_argument("--semi-axes", type=_csv(float, 3), default=[18.0, 14.0, 11.0])
    p.add_argument("--center", type=_csv(float, 3), default=None)
    p.add_argument("--wall-thickness", type=float, default=2.0)
    p.add_argument("--noise-sigma", type=float, default=5.0)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--scar-patch", type=_csv(float, 3), action="append",
                   help="azimuth_center_deg,azimuth_width_deg,thickness_fraction (repeatable)")
    p.add_argument("--format", choices=("nifti", "raw"), default="nifti",
                   help="raw writes the header+blob debug format used by fixture tests")
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("sdm", help="compute normalized cavity and wall SDM channels")
    p.add_argument("--cavity", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--clip", type=float, default=12.0, metavar="MM")
    p.add_argument("--save-raw", action="store_true", help="also write raw millimeter SDMs")
    p.add_argument("--binarize", action="store_true", help="map positive labels to 1")
    _add_geometry_flags(p)
    p.set_defaults(func=cmd_sdm)

    p = sub.add_parser("wallband", help="build the wall band mask from a cavity mask")
    p.add_argument("--cavity", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--binarize", action="store_true")
    _add_geometry_flags(p)
    p.set_defaults(func=cmd_wallband)

    p = sub.add_parser("bub", help="build boundary uncertainty band and supervision regions")
    p.add_argument("--cavity", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--tau-band", type=float, default=3.0, metavar="MM")
    p.add_argument("--binarize", action="store_true")
    _add_geometry_flags(p)
    p.set_defaults(func=cmd_bub)

    p = sub.add_parser("loss", help="evaluate the ROI-masked loss on a logit volume")
    p.add_argument("--logits", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--roi", required=True)
    p.add_argument("--grad-out", help="write d(total)/d(logits) volume here")
    p.add_argument("--binarize", action="store_true")
    _add_loss_flags(p)
    p.set_defaults(func=cmd_loss)

    p = sub.add_parser("metrics", help="segmentation and localization metrics")
    p.add_argument("--pred")
    p.add_argument("--gt")
    p.add_argument("--cavity")
    p.add_argument("--wall")
    p.add_argument("--batch", help="JSON list of {pred, gt, cavity?, wall?} cases")
    p.add_argument("--binarize", action="store_true")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("pipeline", help="cavity mask -> SDMs + regions (+ loss/metrics)")
    p.add_argument("--cavity", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--pred", help="logit volume (float) or scar mask (uint8)")
    p.add_argument("--gt", help="ground-truth scar mask")
    p.add_argument("--tau-band", type=float, default=3.0, metavar="MM")
    p.add_argument("--clip", type=float, default=12.0, metavar="MM")
    p.add_argument("--binarize", action="store_true")
    _add_geometry_flags(p)
    _add_loss_flags(p)
    p.set_defaults(func=cmd_pipeline)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "metrics" and not args.batch and not (args.pred and args.gt):
        parser.error("metrics needs --pred and --gt (or --batch)")
    try:
        return args.func(args)
    except ScarvoxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
