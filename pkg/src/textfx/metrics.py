"""Image quality metrics.

Inputs are float arrays (or tensors) in [0, 1]; every metric rescales to
the 0..255 range internally so constants keep their conventional values.
PSNR is the standard MSE form capped at 100 dB. SSIM slides an 8x8 uniform
window at stride 1 (population statistics); a whole-image variant backs
closed-form checks. Perceptual and style distances run on a fixed
convolutional backbone with five taps, shallow to deep; the backbone is
loaded from a weights file or built from a seed, and is never trained.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch
from torch import nn

SSIM_C1 = 6.5025
SSIM_C2 = 58.5225
PSNR_CAP_DB = 100.0


def _to_array(img) -> np.ndarray:
    if isinstance(img, torch.Tensor):
        img = img.detach().cpu().numpy()
    return np.asarray(img, dtype=np.float64)


def psnr(x, y) -> float:
    """Peak signal-to-noise ratio in dB between images in [0, 1]."""
    x, y = _to_array(x), _to_array(y)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {y.shape}")
    mse = float(np.mean((x * 255.0 - y * 255.0) ** 2))
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(PSNR_CAP_DB, 10.0 * np.log10(255.0**2 / mse))


def _to_gray255(img: np.ndarray) -> np.ndarray:
    if img.ndim == 3:
        img = img.mean(axis=0)
    if img.ndim != 2:
        raise ValueError(f"expected (H, W) or (C, H, W), got shape {img.shape}")
    return img * 255.0


def ssim(x, y, window: int | None = 8) -> float:
    """Structural similarity; `window=None` uses whole-image statistics."""
    gx, gy = _to_gray255(_to_array(x)), _to_gray255(_to_array(y))
    if gx.shape != gy.shape:
        raise ValueError(f"shape mismatch: {gx.shape} vs {gy.shape}")
    if window is None:
        return float(_ssim_stats(gx, gy))
    if window < 2:
        raise ValueError(f"window must be >= 2, got {window}")
    h, w = gx.shape
    if h < window or w < window:
        raise ValueError(f"image {gx.shape} smaller than {window}x{window} window")
    wx = np.lib.stride_tricks.sliding_window_view(gx, (window, window))
    wy = np.lib.stride_tricks.sliding_window_view(gy, (window, window))
    values = _ssim_stats(wx.reshape(-1, window * window), wy.reshape(-1, window * window), axis=1)
    return float(values.mean())


def _ssim_stats(x: np.ndarray, y: np.ndarray, axis=None):
    mx, my = x.mean(axis=axis), y.mean(axis=axis)
    vx, vy = x.var(axis=axis), y.var(axis=axis)
    cov = (x * y).mean(axis=axis) - mx * my
    return ((2 * mx * my + SSIM_C1) * (2 * cov + SSIM_C2)) / (
        (mx**2 + my**2 + SSIM_C1) * (vx + vy + SSIM_C2)
    )


class PerceptualBackbone(nn.Module):
    """Frozen five-tap convolutional feature extractor.

    Five conv blocks with 2x pooling between them; the activation after
    each block's first convolution is a tap. Weights come from a file or a
    seeded random init; either way they are frozen.
    """

    WIDTHS = (16, 32, 64, 96, 128)
    FORMAT_VERSION = 1

    def __init__(self, seed: int = 0):
        super().__init__()
        torch.manual_seed(seed)
        blocks = []
        cin = 3
        for width in self.WIDTHS:
            blocks.append(nn.Conv2d(cin, width, 3, padding=1))
            cin = width
        self.taps = nn.ModuleList(blocks)
        self.pool = nn.AvgPool2d(2)
        for p in self.parameters():
            p.requires_grad_(False)
        self.eval()

    def forward(self, x: torch.Tensor) -> list[torch.Tensor]:
        feats = []
        h = x
        for i, conv in enumerate(self.taps):
            h = torch.relu(conv(h))
            feats.append(h)
            if i < len(self.taps) - 1:
                h = self.pool(h)
        return feats

    def save(self, path: Path | str) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        torch.save({"version": self.FORMAT_VERSION, "state": self.state_dict()}, path)
        return path

    @classmethod
    def load(cls, path: Path | str) -> "PerceptualBackbone":
        payload = torch.load(Path(path), map_location="cpu", weights_only=True)
        if payload.get("version") != cls.FORMAT_VERSION:
            raise ValueError(f"unsupported backbone version: {payload.get('version')!r}")
        backbone = cls()
        expected = backbone.state_dict()
        state = payload["state"]
        if set(state) != set(expected):
            raise ValueError("backbone weights file does not match the architecture")
        for key, tensor in state.items():
            if tuple(tensor.shape) != tuple(expected[key].shape):
                raise ValueError(f"backbone shape mismatch for {key}")
        backbone.load_state_dict(state)
        return backbone


def _features(img, backbone: PerceptualBackbone) -> list[torch.Tensor]:
    arr = _to_array(img)
    if arr.ndim != 3 or arr.shape[0] != 3:
        raise ValueError(f"expected a (3, H, W) image, got shape {arr.shape}")
    with torch.no_grad():
        return backbone(torch.from_numpy(arr * 255.0).float().unsqueeze(0))


def perceptual(x, y, backbone: PerceptualBackbone) -> float:
    """Sum over taps of the mean squared feature difference."""
    fx, fy = _features(x, backbone), _features(y, backbone)
    return float(sum(((a - b) ** 2).mean() for a, b in zip(fx, fy)))


def _gram(feat: torch.Tensor) -> torch.Tensor:
    b, c, h, w = feat.shape
    flat = feat.reshape(b, c, h * w)
    return flat @ flat.transpose(1, 2) / float(c * h * w)


def style_metric(x, y, backbone: PerceptualBackbone) -> float:
    """Sum over taps of the mean squared Gram-matrix difference."""
    fx, fy = _features(x, backbone), _features(y, backbone)
    return float(sum(((_gram(a) - _gram(b)) ** 2).mean() for a, b in zip(fx, fy)))
