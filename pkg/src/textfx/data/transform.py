"""Glyph preprocessing and colormap-based style synthesis.

A glyph enters the model as three planes: the binary glyph itself, the
distance of each foreground pixel to the nearest background pixel, and the
distance of each background pixel to the nearest foreground pixel. The two
distance planes give the otherwise flat bitmap a smooth spatial gradient,
which is what makes colour effects along and around the glyph learnable.
Distances are exact Euclidean and normalized by the image diagonal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .glyphs import RawGlyph

BINARIZE_THRESHOLD = 128


@dataclass
class GlyphImage:
    """Preprocessed glyph: float32 planes (3, H, W).

    Plane 0 is the binary glyph in {0, 1}, plane 1 the distance to
    background (positive only on foreground), plane 2 the distance to
    foreground (positive only on background). Both distances are divided
    by the image diagonal.
    """

    channels: np.ndarray


@dataclass
class StyleImage:
    """Rendered text effect: float32 RGB pixels (3, H, W) in [0, 1]."""

    pixels: np.ndarray
    style_id: str
    glyph_id: str


def glyph_image_from_mask(mask: np.ndarray) -> GlyphImage:
    """Build the three-plane representation from a boolean foreground mask."""
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2:
        raise ValueError(f"glyph mask must be 2-D, got shape {mask.shape}")
    if mask.all():
        raise ValueError("glyph mask is all foreground")
    if not mask.any():
        raise ValueError("glyph mask is all background")
    h, w = mask.shape
    diag = float(np.hypot(h, w))
    to_background = ndimage.distance_transform_edt(mask)
    to_foreground = ndimage.distance_transform_edt(~mask)
    channels = np.stack(
        [
            mask.astype(np.float64),
            to_background / diag,
            to_foreground / diag,
        ]
    ).astype(np.float32)
    return GlyphImage(channels=channels)


def preprocess_glyph(raw: RawGlyph, metric: str = "euclidean") -> GlyphImage:
    """Binarize a raw glyph at 128 and attach its two distance planes."""
    if metric != "euclidean":
        raise ValueError(f"unsupported distance metric: {metric!r}")
    bitmap = np.asarray(raw.bitmap)
    if bitmap.ndim != 2:
        raise ValueError(f"raw glyph must be 2-D, got shape {bitmap.shape}")
    return glyph_image_from_mask(bitmap >= BINARIZE_THRESHOLD)


@dataclass(frozen=True)
class Colormap:
    """Piecewise-linear map from a distance value in [0, 1] to an RGB colour.

    `points` is an ordered tuple of (distance, (r, g, b)) control points.
    Distances must be strictly increasing with the first at 0 and the last
    at 1; colour components live in [0, 1].
    """

    points: tuple[tuple[float, tuple[float, float, float]], ...]

    def __post_init__(self) -> None:
        if len(self.points) < 2:
            raise ValueError("colormap needs at least two control points")
        xs = [p[0] for p in self.points]
        if xs[0] != 0.0 or xs[-1] != 1.0:
            raise ValueError("colormap must start at distance 0 and end at 1")
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError("colormap distances must be strictly increasing")
        for _, colour in self.points:
            if len(colour) != 3 or any(c < 0.0 or c > 1.0 for c in colour):
                raise ValueError("colormap colours must be RGB triples in [0, 1]")

    def __call__(self, values: np.ndarray) -> np.ndarray:
        """Evaluate at `values` (any shape); returns shape + (3,) float32."""
        values = np.asarray(values, dtype=np.float64)
        xs = np.array([p[0] for p in self.points])
        cols = np.array([p[1] for p in self.points])
        out = np.stack([np.interp(values, xs, cols[:, c]) for c in range(3)], axis=-1)
        return out.astype(np.float32)

    @staticmethod
    def random(rng: np.random.Generator, interior_points: int = 2, max_interior: float = 1.0) -> "Colormap":
        """Random map with `interior_points` extra stops below `max_interior`."""
        xs = np.sort(rng.uniform(1e-3, max_interior, size=interior_points))
        # nudge apart any coincident draws
        for i in range(1, len(xs)):
            if xs[i] <= xs[i - 1]:
                xs[i] = np.nextafter(xs[i - 1], 1.0)
        stops = [0.0, *xs.tolist(), 1.0]
        points = tuple((float(x), tuple(rng.uniform(0.0, 1.0, 3).tolist())) for x in stops)
        return Colormap(points=points)


def augment_style(
    x: GlyphImage,
    fg_map: Colormap,
    bg_map: Colormap,
    style_id: str = "",
    glyph_id: str = "",
) -> StyleImage:
    """Colour a glyph into a synthetic text effect.

    Foreground pixels are coloured by `fg_map` evaluated at the distance-to-
    background plane, background pixels by `bg_map` at the distance-to-
    foreground plane, so no pixel ever takes a colour from the wrong map.
    """
    planes = x.channels
    if planes.ndim != 3 or planes.shape[0] != 3:
        raise ValueError(f"glyph image must have shape (3, H, W), got {planes.shape}")
    fg = planes[0] >= 0.5
    pixels = np.where(fg[..., None], fg_map(planes[1]), bg_map(planes[2]))
    return StyleImage(
        pixels=np.moveaxis(pixels, -1, 0).astype(np.float32),
        style_id=style_id,
        glyph_id=glyph_id,
    )
