"""Image metrics against independent scalar-loop references."""

import math

import numpy as np
import pytest
import torch

from textfx.metrics import (
    PSNR_CAP_DB,
    SSIM_C1,
    SSIM_C2,
    PerceptualBackbone,
    perceptual,
    psnr,
    ssim,
    style_metric,
)


def psnr_reference(x, y):
    """Textbook PSNR with explicit loops, the independent oracle."""
    total = 0.0
    count = 0
    flat_x, flat_y = x.reshape(-1), y.reshape(-1)
    for a, b in zip(flat_x, flat_y):
        diff = float(a) * 255.0 - float(b) * 255.0
        total += diff * diff
        count += 1
    mse = total / count
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(PSNR_CAP_DB, 10.0 * math.log10(255.0**2 / mse))


def ssim_reference(x, y, window=8):
    """Sliding-window SSIM with explicit loops over every window."""
    gx = x.mean(axis=0) * 255.0
    gy = y.mean(axis=0) * 255.0
    h, w = gx.shape
    vals = []
    for r in range(h - window + 1):
        for c in range(w - window + 1):
            px = gx[r : r + window, c : c + window].reshape(-1)
            py = gy[r : r + window, c : c + window].reshape(-1)
            mx, my = px.mean(), py.mean()
            vx, vy = px.var(), py.var()
            cov = (px * py).mean() - mx * my
            vals.append(
                ((2 * mx * my + SSIM_C1) * (2 * cov + SSIM_C2))
                / ((mx**2 + my**2 + SSIM_C1) * (vx + vy + SSIM_C2))
            )
    return float(np.mean(vals))


def test_psnr_matches_loop_reference():
    rng = np.random.default_rng(0)
    for _ in range(20):
        x = rng.random((3, 16, 16))
        y = rng.random((3, 16, 16))
        assert psnr(x, y) == pytest.approx(psnr_reference(x, y), abs=1e-9)


def test_psnr_closed_forms():
    x = np.zeros((3, 8, 8))
    assert psnr(x, x) == PSNR_CAP_DB
    one_count = x.copy()
    one_count[0, 0, 0] = 1.0 / 255.0  # unit error in one of 192 pixel slots
    expected = 10.0 * math.log10(255.0**2 / (1.0 / 192.0))
    assert psnr(x, one_count) == pytest.approx(expected, abs=1e-9)
    # uniform unit error: mse = 1 -> 10 log10(255^2) = 48.1308 dB
    y = x + 1.0 / 255.0
    assert psnr(x, y) == pytest.approx(48.13080361, abs=1e-4)


def test_psnr_symmetry_and_shape_check():
    rng = np.random.default_rng(1)
    x, y = rng.random((3, 8, 8)), rng.random((3, 8, 8))
    assert psnr(x, y) == pytest.approx(psnr(y, x), abs=1e-12)
    with pytest.raises(ValueError):
        psnr(x, rng.random((3, 8, 9)))


def test_ssim_matches_loop_reference():
    rng = np.random.default_rng(2)
    for _ in range(10):
        x = rng.random((3, 12, 12))
        y = np.clip(x + rng.normal(0, 0.1, x.shape), 0, 1)
        assert ssim(x, y) == pytest.approx(ssim_reference(x, y), abs=1e-9)


def test_ssim_identity_and_range():
    rng = np.random.default_rng(3)
    x = rng.random((3, 16, 16))
    assert ssim(x, x) == pytest.approx(1.0, abs=1e-12)
    y = rng.random((3, 16, 16))
    assert -1.0 <= ssim(x, y) <= 1.0
    assert ssim(x, y) == pytest.approx(ssim(y, x), abs=1e-12)


def test_ssim_global_closed_form():
    """Constant black vs constant white, whole-image statistics."""
    x = np.zeros((3, 8, 8))
    y = np.ones((3, 8, 8))
    expected = (SSIM_C1 * SSIM_C2) / ((255.0**2 + SSIM_C1) * SSIM_C2)
    assert ssim(x, y, window=None) == pytest.approx(expected, abs=1e-12)
    assert ssim(x, y, window=None) == pytest.approx(SSIM_C1 / (255.0**2 + SSIM_C1), abs=1e-12)


def test_ssim_window_validation():
    x = np.zeros((3, 8, 8))
    with pytest.raises(ValueError, match="window"):
        ssim(x, x, window=1)
    with pytest.raises(ValueError, match="smaller"):
        ssim(x, x, window=16)
    with pytest.raises(ValueError):
        ssim(x, np.zeros((3, 9, 8)))


def test_ssim_penalizes_structure_loss_more_than_psnr():
    rng = np.random.default_rng(4)
    x = np.zeros((3, 16, 16))
    x[:, 4:12, 4:12] = 1.0
    shifted = np.roll(x, 4, axis=2)
    noisy = np.clip(x + rng.normal(0, 0.05, x.shape), 0, 1)
    assert ssim(x, noisy) > ssim(x, shifted)


@pytest.fixture(scope="module")
def backbone():
    return PerceptualBackbone(seed=0)


def test_perceptual_zero_on_identical_and_positive_otherwise(backbone):
    rng = np.random.default_rng(5)
    x = rng.random((3, 32, 32)).astype(np.float32)
    y = rng.random((3, 32, 32)).astype(np.float32)
    assert perceptual(x, x, backbone) == 0.0
    assert perceptual(x, y, backbone) > 0.0
    assert style_metric(x, x, backbone) == 0.0
    assert style_metric(x, y, backbone) > 0.0


def test_style_metric_forgives_layout_more_than_perceptual(backbone):
    """Tile-shuffling keeps texture statistics but destroys layout, so the
    Gram-based distance should drop far more than the feature distance."""
    rng = np.random.default_rng(6)
    base = rng.random((3, 8, 8)).astype(np.float32)
    x = np.kron(base, np.ones((1, 4, 4))).astype(np.float32)
    tiles = x.reshape(3, 4, 8, 4, 8).transpose(1, 3, 0, 2, 4).reshape(16, 3, 8, 8)
    order = rng.permutation(16)
    shuffled = tiles[order].reshape(4, 4, 3, 8, 8).transpose(2, 0, 3, 1, 4).reshape(3, 32, 32)
    flat = np.zeros_like(x) + x.mean()

    p_shuffle = perceptual(x, shuffled, backbone)
    s_shuffle = style_metric(x, shuffled, backbone)
    p_flat = perceptual(x, flat, backbone)
    s_flat = style_metric(x, flat, backbone)
    assert s_shuffle / s_flat < p_shuffle / p_flat


def test_backbone_is_frozen_and_deterministic(backbone):
    assert all(not p.requires_grad for p in backbone.parameters())
    again = PerceptualBackbone(seed=0)
    for a, b in zip(backbone.parameters(), again.parameters()):
        assert torch.equal(a, b)
    other = PerceptualBackbone(seed=1)
    assert any(
        not torch.equal(a, b) for a, b in zip(backbone.parameters(), other.parameters())
    )


def test_backbone_save_load_round_trip(tmp_path, backbone):
    rng = np.random.default_rng(7)
    x = rng.random((3, 32, 32)).astype(np.float32)
    y = rng.random((3, 32, 32)).astype(np.float32)
    path = backbone.save(tmp_path / "b.pt")
    loaded = PerceptualBackbone.load(path)
    assert perceptual(x, y, loaded) == pytest.approx(perceptual(x, y, backbone), rel=1e-7)

    payload = torch.load(path, weights_only=True)
    payload["version"] = 99
    torch.save(payload, tmp_path / "bad.pt")
    with pytest.raises(ValueError, match="version"):
        PerceptualBackbone.load(tmp_path / "bad.pt")
