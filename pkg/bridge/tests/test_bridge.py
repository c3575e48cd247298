"""Bridge acceptance: array outputs must match the CLI bit-for-bit (volumes)
and to 9 significant digits (JSON scalars), and the exported gradient must
survive a host-side finite-difference check.
"""

import json
import subprocess
import sys

import numpy as np
import pytest

import scarvox
from scarvox import BinaryMask, DegenerateMaskError, ScalarVolume, Spacing, cli, nifti
from scarvox.phantom import PhantomSpec, generate
from scarvox.sdm import build_sdm_pair

from scarvox_bridge import __version__, bridge_loss, bridge_regions, bridge_sdm

ISO = Spacing(1.0, 1.0, 1.0)

PHANTOM_CASES = [
    PhantomSpec(dims=(40, 40, 40), semi_axes_mm=(10.0, 9.0, 8.0), seed=seed,
                noise_sigma=0.0)
    for seed in range(4)
] + [
    PhantomSpec(dims=(40, 40, 32), spacing=Spacing(1.0, 1.0, 1.25),
                semi_axes_mm=(11.0, 8.0, 7.0), seed=10 + k, noise_sigma=0.0)
    for k in range(3)
] + [
    PhantomSpec(dims=(48, 48, 20), spacing=Spacing(0.625, 0.625, 2.5),
                semi_axes_mm=(9.0, 8.0, 7.0), seed=20 + k, noise_sigma=0.0)
    for k in range(3)
]


def run_cli(args, capsys):
    capsys.readouterr()
    code = cli.main(args)
    out = capsys.readouterr().out
    return code, out


def spacing_tuple(sp):
    return (sp.sx, sp.sy, sp.sz)


def test_version_matches_core_library():
    assert __version__ == scarvox.__version__


@pytest.mark.parametrize("spec", PHANTOM_CASES)
def test_bridge_sdm_matches_cli_volumes_bit_exactly(spec, tmp_path, capsys):
    _, cavity, _, _ = generate(spec)
    cavity_path = tmp_path / "cavity.nii.gz"
    nifti.write_volume(cavity_path, cavity)
    out = tmp_path / "out"
    code, _ = run_cli(["sdm", "--cavity", str(cavity_path), "--out-dir", str(out),
                       "--tau-wall", "2", "--clip", "12"], capsys)
    assert code == 0

    cav_sdm, wall_sdm = bridge_sdm(cavity.data, spacing_tuple(spec.spacing),
                                   tau_wall_mm=2.0, clip_mm=12.0)
    cli_cav = nifti.read_volume(out / "cavity_sdm.nii.gz").data
    cli_wall = nifti.read_volume(out / "wall_sdm.nii.gz").data
    # the CLI stores float32; the bridge float64 must round to the same bits
    assert np.array_equal(cav_sdm.astype(np.float32), cli_cav.astype(np.float32))
    assert np.array_equal(wall_sdm.astype(np.float32), cli_wall.astype(np.float32))

    pair = build_sdm_pair(cavity, tau_wall_mm=2.0, clip_mm=12.0)
    assert np.array_equal(cav_sdm, pair.cavity_sdm.data)
    assert np.array_equal(wall_sdm, pair.wall_sdm.data)


def test_bridge_regions_matches_cli_masks(tmp_path, capsys):
    spec = PHANTOM_CASES[0]
    _, cavity, _, _ = generate(spec)
    cavity_path = tmp_path / "cavity.nii.gz"
    nifti.write_volume(cavity_path, cavity)
    out = tmp_path / "out"
    code, _ = run_cli(["bub", "--cavity", str(cavity_path), "--out-dir", str(out),
                       "--tau-wall", "2", "--tau-band", "3"], capsys)
    assert code == 0

    regs = bridge_regions(cavity.data, spacing_tuple(spec.spacing),
                          tau_wall_mm=2.0, tau_band_mm=3.0)
    for name, filename in (("roi_wall", "roi_wall.nii.gz"), ("bub", "bub.nii.gz"),
                           ("effective", "effective.nii.gz")):
        assert np.array_equal(regs[name], nifti.read_volume(out / filename).data)


def loss_fixture(tmp_path, seed=0, dims=(10, 10, 10)):
    rng = np.random.default_rng(seed)
    logits = rng.normal(0.0, 3.0, dims)
    gt = (rng.random(dims) < 0.25).astype(np.uint8)
    roi = (rng.random(dims) < 0.6).astype(np.uint8)
    roi.flat[0] = 1
    paths = {}
    for name, vol in (("logits", ScalarVolume(logits, ISO)),
                      ("gt", BinaryMask(gt, ISO)),
                      ("roi", BinaryMask(roi, ISO))):
        paths[name] = tmp_path / f"{name}.nii.gz"
        nifti.write_volume(paths[name], vol)
    # the CLI works from the float32 file payload; feed the bridge the same bits
    logits32 = nifti.read_volume(paths["logits"]).data
    return logits32, gt, roi, paths


def test_bridge_loss_matches_cli_to_nine_digits(tmp_path, capsys):
    for seed in range(10):
        case_dir = tmp_path / f"case{seed}"
        case_dir.mkdir()
        logits, gt, roi, paths = loss_fixture(case_dir, seed=seed)
        code, out = run_cli(["loss", "--logits", str(paths["logits"]),
                             "--gt", str(paths["gt"]), "--roi", str(paths["roi"])],
                            capsys)
        assert code == 0
        cli_payload = json.loads(out)

        report = bridge_loss(logits, gt, roi, want_grad=False)
        for key in ("dice_roi", "wbce_roi", "dice_global", "combined", "total", "w_plus"):
            assert float(f"{report[key]:.9g}") == cli_payload[key], key
        assert report["P"] == cli_payload["P"]
        assert report["N"] == cli_payload["N"]


def test_bridge_gradient_passes_host_side_finite_differences():
    rng = np.random.default_rng(77)
    dims = (6, 6, 6)
    logits = rng.normal(0.0, 2.0, dims)
    gt = (rng.random(dims) < 0.3).astype(np.uint8)
    roi = (rng.random(dims) < 0.5).astype(np.uint8)
    roi.flat[0] = 1

    grad = bridge_loss(logits, gt, roi)["grad"]
    h = 1e-4
    fd = np.zeros(dims)
    for idx in np.ndindex(dims):
        zp = logits.copy()
        zm = logits.copy()
        zp[idx] += h
        zm[idx] -= h
        fd[idx] = (bridge_loss(zp, gt, roi, want_grad=False)["total"]
                   - bridge_loss(zm, gt, roi, want_grad=False)["total"]) / (2 * h)
    rel = np.abs(grad - fd) / (np.abs(grad) + np.abs(fd) + 1e-12)
    assert rel.max() < 1e-4


def test_alpha_zero_identity_through_bridge():
    rng = np.random.default_rng(78)
    dims = (8, 8, 8)
    logits = rng.normal(0.0, 2.0, dims)
    gt = (rng.random(dims) < 0.3).astype(np.uint8)
    roi = np.ones(dims, np.uint8)
    report = bridge_loss(logits, gt, roi, config={"alpha": 0.0}, want_grad=False)
    assert report["total"] == report["combined"]


def test_bridge_error_mirroring():
    empty = np.zeros((6, 6, 6), np.uint8)
    with pytest.raises(DegenerateMaskError):
        bridge_sdm(empty, (1.0, 1.0, 1.0))
    with pytest.raises(ValueError):
        bridge_sdm(np.zeros((6, 6), np.uint8), (1.0, 1.0, 1.0))
    with pytest.raises(TypeError):
        bridge_sdm(np.zeros((6, 6, 6), np.float32), (1.0, 1.0, 1.0))
    with pytest.raises(TypeError):
        bridge_loss(np.zeros((4, 4, 4), np.int32), np.zeros((4, 4, 4), np.uint8),
                    np.ones((4, 4, 4), np.uint8))
    with pytest.raises(ValueError):
        bridge_loss(np.zeros((4, 4, 4)), np.zeros((4, 4, 4), np.uint8),
                    np.ones((4, 4, 4), np.uint8), config={"bogus": 1})


def test_outputs_are_read_only_views():
    spec = PHANTOM_CASES[0]
    _, cavity, _, _ = generate(spec)
    cav_sdm, wall_sdm = bridge_sdm(cavity.data, spacing_tuple(spec.spacing))
    assert not cav_sdm.flags.writeable
    assert not wall_sdm.flags.writeable
    assert cav_sdm.copy().flags.writeable  # hosts copy when they need to mutate


def test_installed_console_script_smoke(tmp_path):
    out = tmp_path / "phantom"
    result = subprocess.run(
        [sys.executable, "-m", "scarvox.cli", "phantom", "--out-dir", str(out),
         "--dims", "24,24,24", "--semi-axes", "6,5,4", "--wall-thickness", "1.5"],
        capture_output=True, text=True,
    )
    assert result.returncode == 0, result.stderr
    assert (out / "cavity.nii.gz").exists()
    payload = json.loads(result.stdout)
    assert payload["schema"] == 1
