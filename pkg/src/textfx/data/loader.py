"""Training triple stream.

A training example is (x, y, y') where x is the three-plane glyph image, y
the matching effect image, and y' an effect image of the same style on a
different glyph. y' is what tells the model which style to apply, so every
style in the requested split needs at least two glyphs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .imageio import load_planes_png
from .manifest import DatasetManifest
from .transform import GlyphImage, StyleImage


@dataclass
class TrainingTriple:
    x: GlyphImage
    y: StyleImage
    y_prime: StyleImage

    def validate(self) -> None:
        if self.y.style_id != self.y_prime.style_id:
            raise ValueError("y and y_prime must share a style")
        if self.y.glyph_id == self.y_prime.glyph_id:
            raise ValueError("y_prime must show a different glyph than y")


@dataclass
class TripleBatch:
    """Stacked float32 arrays of shape (B, 3, H, W) plus bookkeeping ids."""

    x: np.ndarray
    y: np.ndarray
    y_prime: np.ndarray
    style_ids: list[str]
    glyph_ids: list[str]
    y_prime_glyph_ids: list[str]

    def __len__(self) -> int:
        return self.x.shape[0]


def load_entry_arrays(manifest: DatasetManifest, split: str) -> list[dict]:
    """Decode every (glyph, style) image of `split` into memory once."""
    root = manifest.root
    glyph_cache: dict[str, np.ndarray] = {}
    rows = []
    for e in manifest.select(split=split):
        if e.glyph_path not in glyph_cache:
            glyph_cache[e.glyph_path] = load_planes_png(root / e.glyph_path)
        rows.append(
            {
                "style_id": e.style_id,
                "glyph_id": e.glyph_id,
                "x": glyph_cache[e.glyph_path],
                "y": load_planes_png(root / e.style_path),
            }
        )
    return rows


def load_triples(
    manifest: DatasetManifest,
    split: str,
    batch_size: int,
    seed: int,
    loop: bool = False,
) -> Iterator[TripleBatch]:
    """Yield shuffled TripleBatch objects, deterministically under `seed`.

    Every epoch reshuffles and redraws each item's y'. The final batch of an
    epoch may be smaller than `batch_size`. With `loop=True` the stream is
    endless; otherwise it stops after one epoch.
    """
    if split not in ("train", "test"):
        raise ValueError(f"split must be 'train' or 'test', got {split!r}")
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    rows = load_entry_arrays(manifest, split)
    if not rows:
        raise ValueError(f"no entries in split {split!r}")
    by_style: dict[str, list[int]] = {}
    for i, row in enumerate(rows):
        by_style.setdefault(row["style_id"], []).append(i)
    for style_id, members in by_style.items():
        if len(members) < 2:
            raise ValueError(f"style {style_id!r} has a single glyph in split {split!r}; no valid y'")

    rng = np.random.default_rng(seed)
    while True:
        order = rng.permutation(len(rows))
        for start in range(0, len(order), batch_size):
            idx = order[start : start + batch_size]
            ref_idx = []
            for i in idx:
                peers = [j for j in by_style[rows[i]["style_id"]] if j != i]
                ref_idx.append(peers[rng.integers(len(peers))])
            yield TripleBatch(
                x=np.stack([rows[i]["x"] for i in idx]),
                y=np.stack([rows[i]["y"] for i in idx]),
                y_prime=np.stack([rows[j]["y"] for j in ref_idx]),
                style_ids=[rows[i]["style_id"] for i in idx],
                glyph_ids=[rows[i]["glyph_id"] for i in idx],
                y_prime_glyph_ids=[rows[j]["glyph_id"] for j in ref_idx],
            )
        if not loop:
            return
