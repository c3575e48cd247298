import numpy as np
import pytest

from scarvox import (
    BinaryMask,
    EmptyRoiError,
    LossConfig,
    ScalarVolume,
    ShapeError,
    Spacing,
    global_dice_loss,
    roi_dice_loss,
    roi_weighted_bce,
    total_loss,
)

ISO = Spacing(1.0, 1.0, 1.0)


def vol(data):
    return ScalarVolume(np.asarray(data, dtype=np.float64), ISO)


def mask(data):
    return BinaryMask(np.asarray(data), ISO)


def random_case(rng, dims=(6, 6, 6), roi_density=0.5, pos_density=0.3, z_scale=2.0):
    z = vol(rng.normal(0.0, z_scale, dims))
    y = mask(rng.random(dims) < pos_density)
    roi = rng.random(dims) < roi_density
    if not roi.any():
        roi.flat[0] = True
    return z, y, mask(roi)


def finite_difference_grad(z, y, roi, cfg, h=1e-4):
    base = z.data
    fd = np.zeros_like(base)
    for idx in np.ndindex(base.shape):
        zp = base.copy()
        zm = base.copy()
        zp[idx] += h
        zm[idx] -= h
        lp = total_loss(ScalarVolume(zp, z.spacing), y, roi, cfg).total
        lm = total_loss(ScalarVolume(zm, z.spacing), y, roi, cfg).total
        fd[idx] = (lp - lm) / (2.0 * h)
    return fd


# --- ROI Dice ----------------------------------------------------------------

def test_roi_dice_perfect_prediction():
    rng = np.random.default_rng(50)
    y = mask(rng.random((6, 6, 6)) < 0.4)
    roi = mask(np.ones((6, 6, 6), np.uint8))
    p = vol(y.data.astype(np.float64))
    assert roi_dice_loss(p, y, roi) <= 1e-8


def test_roi_dice_disjoint_prediction():
    rng = np.random.default_rng(51)
    y = mask(rng.random((6, 6, 6)) < 0.4)
    roi = mask(np.ones((6, 6, 6), np.uint8))
    p = vol(1.0 - y.data.astype(np.float64))
    assert roi_dice_loss(p, y, roi) == pytest.approx(1.0, abs=1e-7)


def test_roi_dice_empty_empty_is_zero():
    y = mask(np.zeros((4, 4, 4), np.uint8))
    roi = mask(np.ones((4, 4, 4), np.uint8))
    p = vol(np.zeros((4, 4, 4)))
    assert roi_dice_loss(p, y, roi) == 0.0


def test_roi_dice_shape_mismatch():
    y = mask(np.zeros((4, 4, 4), np.uint8))
    roi = mask(np.zeros((4, 4, 5), np.uint8))
    with pytest.raises(ShapeError):
        roi_dice_loss(vol(np.zeros((4, 4, 4))), y, roi)


def test_roi_dice_rejects_out_of_range_probabilities():
    y = mask(np.zeros((3, 3, 3), np.uint8))
    roi = mask(np.ones((3, 3, 3), np.uint8))
    with pytest.raises(ValueError):
        roi_dice_loss(vol(np.full((3, 3, 3), 1.5)), y, roi)


# --- weighted BCE ------------------------------------------------------------

def test_w_plus_is_one_when_balanced():
    data = np.zeros((4, 4, 4), np.uint8)
    data[:2] = 1  # P == N
    y = mask(data)
    roi = mask(np.ones((4, 4, 4), np.uint8))
    _, w_plus, P, N = roi_weighted_bce(vol(np.zeros((4, 4, 4))), y, roi)
    assert P == N
    assert w_plus == 1.0


def test_w_plus_clamps_at_w_max():
    y = mask(np.zeros((16, 16, 16), np.uint8))  # P = 0, N = 4096
    roi = mask(np.ones((16, 16, 16), np.uint8))
    _, w_plus, P, N = roi_weighted_bce(vol(np.zeros((16, 16, 16))), y, roi, w_max=10.0)
    assert (P, N) == (0, 4096)
    assert w_plus == 10.0


def test_wbce_matches_high_precision_oracle():
    from mpmath import exp, log, mp, mpf, sqrt

    mp.dps = 50
    rng = np.random.default_rng(52)
    z, y, roi = random_case(rng, dims=(8, 8, 8), z_scale=4.0)
    loss, w_plus, P, N = roi_weighted_bce(z, y, roi, w_max=10.0, eps=1e-5)

    sel = roi.as_bool()
    eps = mpf(1e-5)
    w = sqrt((mpf(N) + eps) / (mpf(P) + eps))
    w = min(max(w, mpf(1)), mpf(10))
    total = mpf(0)
    for zv, yv in zip(z.data[sel], y.data[sel]):
        sig = 1 / (1 + exp(-mpf(float(zv))))
        yv = int(yv)
        total += -w * yv * log(sig) - (1 - yv) * log(1 - sig)
    oracle = total / int(sel.sum())
    assert abs(loss - float(oracle)) / float(oracle) < 1e-12
    assert abs(w_plus - float(w)) <= abs(float(w)) * 1e-12


def test_wbce_empty_roi():
    y = mask(np.zeros((3, 3, 3), np.uint8))
    roi = mask(np.zeros((3, 3, 3), np.uint8))
    with pytest.raises(EmptyRoiError):
        roi_weighted_bce(vol(np.zeros((3, 3, 3))), y, roi)


def test_wbce_no_overflow_at_extreme_logits():
    data = np.zeros((4, 4, 4))
    data[:2] = 100.0
    data[2:] = -100.0
    y = mask((np.arange(64).reshape(4, 4, 4) % 2).astype(np.uint8))
    roi = mask(np.ones((4, 4, 4), np.uint8))
    loss, w_plus, _, _ = roi_weighted_bce(vol(data), y, roi)
    assert np.isfinite(loss)
    report = total_loss(vol(data), y, roi, LossConfig(), with_grad=True)
    assert np.isfinite(report.total)
    assert np.isfinite(report.grad_logits.data).all()


def test_w_plus_monotone_in_positive_count():
    rng = np.random.default_rng(53)
    roi = mask(np.ones((10, 10, 10), np.uint8))
    z = vol(rng.normal(size=(10, 10, 10)))
    previous = np.inf
    for P in [0, 1, 5, 20, 80, 200, 500, 900, 1000]:
        y_data = np.zeros(1000, np.uint8)
        y_data[:P] = 1
        _, w_plus, got_p, _ = roi_weighted_bce(z, mask(y_data.reshape(10, 10, 10)), roi)
        assert got_p == P
        assert 1.0 <= w_plus <= 10.0
        assert w_plus <= previous
        previous = w_plus


# --- global Dice -------------------------------------------------------------

def test_global_dice_identical():
    rng = np.random.default_rng(54)
    y = mask(rng.random((5, 5, 5)) < 0.5)
    assert global_dice_loss(vol(y.data.astype(float)), y) <= 1e-7


def test_global_dice_empty_empty():
    y = mask(np.zeros((4, 4, 4), np.uint8))
    assert global_dice_loss(vol(np.zeros((4, 4, 4))), y) == 0.0


def test_global_dice_half_overlap():
    p_data = np.zeros((8, 8, 8))
    y_data = np.zeros((8, 8, 8), np.uint8)
    p_data[:4] = 1.0       # 256 predicted
    y_data[2:6] = 1        # 256 true, 128 shared
    loss = global_dice_loss(vol(p_data), mask(y_data))
    assert loss == pytest.approx(0.5, abs=1e-7)


# --- composition -------------------------------------------------------------

def test_total_loss_vanishes_for_confident_correct_prediction():
    rng = np.random.default_rng(55)
    y = mask(rng.random((6, 6, 6)) < 0.3)
    roi = mask(np.ones((6, 6, 6), np.uint8))
    z = vol(np.where(y.as_bool(), 20.0, -20.0))
    report = total_loss(z, y, roi, LossConfig())
    assert report.total <= 1e-6


def test_analytic_gradient_matches_finite_differences():
    rng = np.random.default_rng(56)
    cfg = LossConfig()
    for _ in range(3):
        z, y, roi = random_case(rng)
        grad = total_loss(z, y, roi, cfg, with_grad=True).grad_logits.data
        fd = finite_difference_grad(z, y, roi, cfg)
        rel = np.abs(grad - fd) / (np.abs(grad) + np.abs(fd) + 1e-12)
        assert rel.max() < 1e-4


def test_alpha_zero_reproduces_combined():
    rng = np.random.default_rng(57)
    z, y, roi = random_case(rng)
    report = total_loss(z, y, roi, LossConfig(alpha=0.0))
    assert report.total == report.combined


def test_roi_locality_is_bitwise():
    rng = np.random.default_rng(58)
    z, y, roi = random_case(rng, dims=(10, 10, 10), roi_density=0.3)
    cfg = LossConfig()
    base = total_loss(z, y, roi, cfg)

    outside = np.flatnonzero(~roi.as_bool().ravel())
    perturbed = z.data.copy()
    perturbed.ravel()[rng.choice(outside, size=min(200, outside.size), replace=False)] += \
        rng.normal(0, 5, min(200, outside.size))
    after = total_loss(ScalarVolume(perturbed, ISO), y, roi, cfg)

    assert after.dice_roi == base.dice_roi
    assert after.wbce_roi == base.wbce_roi
    assert after.w_plus == base.w_plus
    assert after.combined == base.combined
    assert after.dice_global != base.dice_global
    assert after.total == after.combined + cfg.alpha * cfg.lambda_dice * after.dice_global


def test_report_identity():
    rng = np.random.default_rng(59)
    cfg = LossConfig(lambda_dice=1.0, lambda_bce=2.0, alpha=0.1)
    for _ in range(10):
        z, y, roi = random_case(rng)
        r = total_loss(z, y, roi, cfg)
        recomposed = (cfg.lambda_dice * r.dice_roi + cfg.lambda_bce * r.wbce_roi
                      + cfg.alpha * cfg.lambda_dice * r.dice_global)
        assert r.total == pytest.approx(recomposed, rel=1e-15, abs=1e-15)
        assert 0.0 <= r.dice_roi <= 1.0
        assert 0.0 <= r.dice_global <= 1.0
        assert r.wbce_roi >= 0.0
        assert 1.0 <= r.w_plus <= cfg.w_max


def test_loss_config_validation():
    with pytest.raises(ValueError):
        LossConfig(lambda_dice=-1.0)
    with pytest.raises(ValueError):
        LossConfig(w_max=0.5)
    with pytest.raises(ValueError):
        LossConfig(epsilon=0.0)
    with pytest.raises(ValueError):
        LossConfig(region_mode="everything")
