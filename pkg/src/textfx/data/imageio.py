"""8-bit PNG round trip for (3, H, W) float planes in [0, 1]."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image


def save_planes_png(path: Path | str, planes: np.ndarray) -> None:
    planes = np.asarray(planes)
    if planes.ndim != 3 or planes.shape[0] != 3:
        raise ValueError(f"expected (3, H, W) planes, got shape {planes.shape}")
    quantized = np.clip(np.round(planes * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(np.moveaxis(quantized, 0, -1), mode="RGB").save(path, format="PNG")


def load_planes_png(path: Path | str) -> np.ndarray:
    with Image.open(path) as img:
        rgb = np.asarray(img.convert("RGB"), dtype=np.float32)
    return np.moveaxis(rgb, -1, 0) / 255.0
