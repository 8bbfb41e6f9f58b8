from .glyphs import FONT_VARIANTS, RawGlyph, glyph_id_sequence, render_glyph
from .imageio import load_planes_png, save_planes_png
from .loader import TrainingTriple, TripleBatch, load_entry_arrays, load_triples
from .manifest import DatasetManifest, ManifestEntry, manifest_sha256, subset_manifest
from .synth import StyleRecipe, apply_recipe, random_recipe, synth_dataset, synth_font_dataset
from .transform import (
    BINARIZE_THRESHOLD,
    Colormap,
    GlyphImage,
    StyleImage,
    augment_style,
    glyph_image_from_mask,
    preprocess_glyph,
)

__all__ = [
    "BINARIZE_THRESHOLD",
    "Colormap",
    "DatasetManifest",
    "FONT_VARIANTS",
    "GlyphImage",
    "ManifestEntry",
    "RawGlyph",
    "StyleImage",
    "StyleRecipe",
    "TrainingTriple",
    "TripleBatch",
    "apply_recipe",
    "augment_style",
    "glyph_id_sequence",
    "glyph_image_from_mask",
    "load_entry_arrays",
    "load_planes_png",
    "load_triples",
    "manifest_sha256",
    "subset_manifest",
    "preprocess_glyph",
    "random_recipe",
    "render_glyph",
    "save_planes_png",
    "synth_dataset",
    "synth_font_dataset",
]
