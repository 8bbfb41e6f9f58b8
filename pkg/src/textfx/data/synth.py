"""Synthetic dataset generation.

Each style is a recipe: one colormap for the glyph body, one for the
background, and optionally a solid outline ring or a drop shadow at a fixed
offset. Applying a recipe to a preprocessed glyph yields a paired
(glyph, effect) example, the supervision unit everything downstream trains
on. Font datasets reuse the same manifest layout with font variants in the
style role and the plain three-plane glyph image as the "effect".
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .glyphs import FONT_VARIANTS, glyph_id_sequence, render_glyph
from .imageio import save_planes_png
from .manifest import DatasetManifest, ManifestEntry, train_count
from .transform import Colormap, GlyphImage, StyleImage, augment_style, preprocess_glyph


@dataclass(frozen=True)
class StyleRecipe:
    fg_map: Colormap
    bg_map: Colormap
    outline: tuple[int, tuple[float, float, float]] | None = None  # (thickness px, colour)
    shadow: tuple[tuple[int, int], tuple[float, float, float]] | None = None  # ((dy, dx), colour)


def random_recipe(rng: np.random.Generator, size: int) -> StyleRecipe:
    # Interior stops sit low because normalized distances rarely exceed ~0.3.
    fg_map = Colormap.random(rng, interior_points=2, max_interior=0.12)
    bg_map = Colormap.random(rng, interior_points=2, max_interior=0.45)
    outline = None
    if rng.random() < 0.5:
        outline = (max(1, size // 21), tuple(rng.uniform(0.0, 1.0, 3).tolist()))
    shadow = None
    if rng.random() < 0.5:
        off = max(2, size // 16)
        shadow = ((off, off), tuple(rng.uniform(0.0, 1.0, 3).tolist()))
    return StyleRecipe(fg_map=fg_map, bg_map=bg_map, outline=outline, shadow=shadow)


def apply_recipe(
    recipe: StyleRecipe,
    glyph: GlyphImage,
    style_id: str = "",
    glyph_id: str = "",
) -> StyleImage:
    base = augment_style(glyph, recipe.fg_map, recipe.bg_map, style_id=style_id, glyph_id=glyph_id)
    pixels = base.pixels.copy()
    fg = glyph.channels[0] >= 0.5
    h, w = fg.shape
    diag = float(np.hypot(h, w))
    if recipe.shadow is not None:
        (dy, dx), colour = recipe.shadow
        shifted = np.zeros_like(fg)
        ys = slice(max(dy, 0), h + min(dy, 0))
        xs = slice(max(dx, 0), w + min(dx, 0))
        ys_src = slice(max(-dy, 0), h + min(-dy, 0))
        xs_src = slice(max(-dx, 0), w + min(-dx, 0))
        shifted[ys, xs] = fg[ys_src, xs_src]
        region = shifted & ~fg
        pixels[:, region] = np.asarray(colour, dtype=np.float32)[:, None]
    if recipe.outline is not None:
        thickness, colour = recipe.outline
        band = ~fg & (glyph.channels[2] * diag <= thickness)
        pixels[:, band] = np.asarray(colour, dtype=np.float32)[:, None]
    return StyleImage(pixels=pixels, style_id=style_id, glyph_id=glyph_id)


def _write_dataset(
    out: Path,
    seed: int,
    size: int,
    glyph_images: dict[str, GlyphImage],
    styles: dict[str, dict[str, StyleImage]],
) -> DatasetManifest:
    out = Path(out)
    (out / "_glyphs").mkdir(parents=True, exist_ok=True)
    glyph_ids = list(glyph_images)
    for gid, gi in glyph_images.items():
        save_planes_png(out / "_glyphs" / f"{gid}.png", gi.channels)

    n_train = train_count(len(glyph_ids))
    rng = np.random.default_rng(seed)
    test_ids = set(rng.choice(glyph_ids, size=len(glyph_ids) - n_train, replace=False).tolist())

    entries = []
    for style_id, per_glyph in styles.items():
        style_dir = out / style_id
        style_dir.mkdir(exist_ok=True)
        for gid in glyph_ids:
            save_planes_png(style_dir / f"{gid}.png", per_glyph[gid].pixels)
            entries.append(
                ManifestEntry(
                    style_id=style_id,
                    glyph_id=gid,
                    split="test" if gid in test_ids else "train",
                    glyph_path=f"_glyphs/{gid}.png",
                    style_path=f"{style_id}/{gid}.png",
                )
            )
    manifest = DatasetManifest(root=out, seed=seed, image_size=size, entries=entries)
    manifest.save()
    return manifest


def synth_dataset(n_styles: int, n_glyphs: int, size: int, seed: int, out: Path | str) -> DatasetManifest:
    """Render a paired glyph/effect dataset of `n_styles` x `n_glyphs` images.

    The same glyph set is shared by every style; the train/test split is by
    glyph, so test glyphs are unseen in training for all styles at once.
    """
    if n_styles < 2:
        raise ValueError(f"need at least 2 styles, got {n_styles}")
    if n_glyphs < 4:
        raise ValueError(f"need at least 4 glyphs, got {n_glyphs}")
    if size < 16:
        raise ValueError(f"image size must be >= 16, got {size}")
    rng = np.random.default_rng(seed)
    glyph_ids = glyph_id_sequence(n_glyphs)
    glyph_images = {gid: preprocess_glyph(render_glyph(gid, size)) for gid in glyph_ids}
    styles: dict[str, dict[str, StyleImage]] = {}
    for s in range(n_styles):
        style_id = f"style{s:02d}"
        recipe = random_recipe(rng, size)
        styles[style_id] = {
            gid: apply_recipe(recipe, gi, style_id=style_id, glyph_id=gid)
            for gid, gi in glyph_images.items()
        }
    return _write_dataset(Path(out), seed, size, glyph_images, styles)


def synth_font_dataset(n_fonts: int, n_glyphs: int, size: int, seed: int, out: Path | str) -> DatasetManifest:
    """Font-transfer dataset: glyphs in the anchor font paired with variants.

    Style images here are the three-plane glyph images of the variant font,
    so the standard training stack learns font transfer unchanged.
    """
    variants = [f for f in FONT_VARIANTS if f != "regular"]
    if not 1 <= n_fonts <= len(variants):
        raise ValueError(f"n_fonts must be in [1, {len(variants)}], got {n_fonts}")
    if n_glyphs < 4:
        raise ValueError(f"need at least 4 glyphs, got {n_glyphs}")
    if size < 16:
        raise ValueError(f"image size must be >= 16, got {size}")
    glyph_ids = glyph_id_sequence(n_glyphs)
    glyph_images = {gid: preprocess_glyph(render_glyph(gid, size)) for gid in glyph_ids}
    styles: dict[str, dict[str, StyleImage]] = {}
    for font_id in variants[:n_fonts]:
        style_id = f"font_{font_id}"
        styles[style_id] = {}
        for gid in glyph_ids:
            variant = preprocess_glyph(render_glyph(gid, size, font_id=font_id))
            styles[style_id][gid] = StyleImage(
                pixels=variant.channels.copy(), style_id=style_id, glyph_id=gid
            )
    return _write_dataset(Path(out), seed, size, glyph_images, styles)
