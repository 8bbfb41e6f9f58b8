"""Procedural glyph rendering.

Glyphs are white-on-black binary bitmaps. The base alphabet is a 5x7 pixel
font scaled up with nearest-neighbour so edges stay hard; ids beyond the
alphabet fall back to seeded stroke doodles so a dataset can hold more
glyphs than the font does. A small set of deterministic font variants
(bold, slant, wide) doubles as the "style" axis for font-transfer data.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np
from PIL import Image, ImageDraw
from scipy import ndimage

FONT_VARIANTS = ("regular", "bold", "slant", "wide")

# 5x7 bitmap font, '#' = foreground.
_FONT_5X7 = {
    "A": (".###.", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"),
    "B": ("####.", "#...#", "#...#", "####.", "#...#", "#...#", "####."),
    "C": (".####", "#....", "#....", "#....", "#....", "#....", ".####"),
    "D": ("####.", "#...#", "#...#", "#...#", "#...#", "#...#", "####."),
    "E": ("#####", "#....", "#....", "####.", "#....", "#....", "#####"),
    "F": ("#####", "#....", "#....", "####.", "#....", "#....", "#...."),
    "G": (".####", "#....", "#....", "#.###", "#...#", "#...#", ".###."),
    "H": ("#...#", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"),
    "I": ("#####", "..#..", "..#..", "..#..", "..#..", "..#..", "#####"),
    "J": ("..###", "...#.", "...#.", "...#.", "...#.", "#..#.", ".##.."),
    "K": ("#...#", "#..#.", "#.#..", "##...", "#.#..", "#..#.", "#...#"),
    "L": ("#....", "#....", "#....", "#....", "#....", "#....", "#####"),
    "M": ("#...#", "##.##", "#.#.#", "#.#.#", "#...#", "#...#", "#...#"),
    "N": ("#...#", "##..#", "#.#.#", "#..##", "#...#", "#...#", "#...#"),
    "O": (".###.", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."),
    "P": ("####.", "#...#", "#...#", "####.", "#....", "#....", "#...."),
    "Q": (".###.", "#...#", "#...#", "#...#", "#.#.#", "#..#.", ".##.#"),
    "R": ("####.", "#...#", "#...#", "####.", "#.#..", "#..#.", "#...#"),
    "S": (".####", "#....", "#....", ".###.", "....#", "....#", "####."),
    "T": ("#####", "..#..", "..#..", "..#..", "..#..", "..#..", "..#.."),
    "U": ("#...#", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."),
    "V": ("#...#", "#...#", "#...#", "#...#", "#...#", ".#.#.", "..#.."),
    "W": ("#...#", "#...#", "#...#", "#.#.#", "#.#.#", "##.##", "#...#"),
    "X": ("#...#", "#...#", ".#.#.", "..#..", ".#.#.", "#...#", "#...#"),
    "Y": ("#...#", "#...#", ".#.#.", "..#..", "..#..", "..#..", "..#.."),
    "Z": ("#####", "....#", "...#.", "..#..", ".#...", "#....", "#####"),
    "0": (".###.", "#...#", "#..##", "#.#.#", "##..#", "#...#", ".###."),
    "1": ("..#..", ".##..", "..#..", "..#..", "..#..", "..#..", "#####"),
    "2": (".###.", "#...#", "....#", "..##.", ".#...", "#....", "#####"),
    "3": (".###.", "#...#", "....#", "..##.", "....#", "#...#", ".###."),
    "4": ("...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#."),
    "5": ("#####", "#....", "####.", "....#", "....#", "#...#", ".###."),
    "6": (".###.", "#....", "#....", "####.", "#...#", "#...#", ".###."),
    "7": ("#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#..."),
    "8": (".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###."),
    "9": (".###.", "#...#", "#...#", ".####", "....#", "....#", ".###."),
}

_ALPHABET = tuple(_FONT_5X7)


@dataclass
class RawGlyph:
    """Binary glyph bitmap, values in {0, 255}, white glyph on black."""

    bitmap: np.ndarray
    glyph_id: str
    font_id: str = "regular"


def glyph_id_sequence(n: int) -> list[str]:
    """First `n` glyph ids: the bitmap alphabet, then stroke doodles."""
    ids = list(_ALPHABET[:n])
    for k in range(max(0, n - len(_ALPHABET))):
        ids.append(f"s{k:02d}")
    return ids


def _bitmap_mask(glyph_id: str, size: int) -> np.ndarray:
    rows = _FONT_5X7[glyph_id]
    cell = max(1, (size * 3 // 4) // 7)
    grid = np.array([[c == "#" for c in row] for row in rows], dtype=bool)
    return np.kron(grid, np.ones((cell, cell), dtype=bool))

def _stroke_mask(glyph_id: str, size: int) -> np.ndarray:
    # Seeded doodle: a few wide polyline strokes plus an ellipse outline.
    rng = np.random.default_rng(zlib.crc32(glyph_id.encode()))
    img = Image.new("L", (size, size), 0)
    draw = ImageDraw.Draw(img)
    lo, hi = size // 6, size - size // 6
    width = max(2, size // 12)
    for _ in range(2):
        pts = [tuple(int(v) for v in rng.integers(lo, hi, 2)) for _ in range(3)]
        draw.line(pts, fill=255, width=width)
    cx, cy = (int(v) for v in rng.integers(lo, hi, 2))
    r = int(rng.integers(size // 8, size // 4))
    draw.ellipse((cx - r, cy - r, cx + r, cy + r), outline=255, width=width)
    return np.asarray(img) >= 128


def _apply_variant(mask: np.ndarray, font_id: str, size: int) -> np.ndarray:
    if font_id == "regular":
        return mask
    if font_id == "bold":
        return ndimage.binary_dilation(mask, iterations=max(1, size // 32))
    if font_id == "slant":
        h, w = mask.shape
        out = np.zeros_like(mask)
        for r in range(h):
            shift = int(round((h / 2 - r) * 0.25))
            if shift >= 0:
                out[r, shift:] = mask[r, : w - shift] if shift else mask[r]
            else:
                out[r, :shift] = mask[r, -shift:]
        return out
    if font_id == "wide":
        # horizontal stretch about the centre, nearest-neighbour resample
        h, w = mask.shape
        centre = (w - 1) / 2.0
        src = np.clip(np.round(centre + (np.arange(w) - centre) / 1.3).astype(int), 0, w - 1)
        return mask[:, src]
    raise ValueError(f"unknown font variant: {font_id!r}")


def render_glyph(glyph_id: str, size: int, font_id: str = "regular") -> RawGlyph:
    """Rasterize `glyph_id` onto a size x size canvas.

    Raises ValueError for unknown font variants, sizes below 16, or ids
    that render to an empty bitmap.
    """
    if size < 16:
        raise ValueError(f"glyph size must be >= 16, got {size}")
    if font_id not in FONT_VARIANTS:
        raise ValueError(f"unknown font variant: {font_id!r}")
    if glyph_id in _FONT_5X7:
        core = _bitmap_mask(glyph_id, size)
        canvas = np.zeros((size, size), dtype=bool)
        top = (size - core.shape[0]) // 2
        left = (size - core.shape[1]) // 2
        canvas[top : top + core.shape[0], left : left + core.shape[1]] = core
    elif glyph_id.startswith("s") and glyph_id[1:].isdigit():
        canvas = _stroke_mask(glyph_id, size)
    else:
        raise ValueError(f"unknown glyph id: {glyph_id!r}")
    canvas = _apply_variant(canvas, font_id, size)
    if not canvas.any() or canvas.all():
        raise ValueError(f"glyph {glyph_id!r} rendered degenerate at size {size}")
    return RawGlyph(bitmap=canvas.astype(np.uint8) * 255, glyph_id=glyph_id, font_id=font_id)
