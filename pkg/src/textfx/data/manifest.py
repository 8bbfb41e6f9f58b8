"""Dataset manifest: which glyph/style images exist and how they are split."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

MANIFEST_VERSION = 1
TRAIN_FRACTION = 0.87


@dataclass
class ManifestEntry:
    style_id: str
    glyph_id: str
    split: str  # "train" | "test"
    glyph_path: str  # relative to the dataset root
    style_path: str


@dataclass
class DatasetManifest:
    root: Path
    seed: int
    image_size: int
    entries: list[ManifestEntry] = field(default_factory=list)

    def style_ids(self) -> list[str]:
        seen: dict[str, None] = {}
        for e in self.entries:
            seen.setdefault(e.style_id, None)
        return list(seen)

    def select(self, split: str | None = None, style_id: str | None = None) -> list[ManifestEntry]:
        out = []
        for e in self.entries:
            if split is not None and e.split != split:
                continue
            if style_id is not None and e.style_id != style_id:
                continue
            out.append(e)
        return out

    @property
    def path(self) -> Path:
        return Path(self.root) / "manifest.json"

    def save(self) -> Path:
        payload = {
            "version": MANIFEST_VERSION,
            "seed": self.seed,
            "image_size": self.image_size,
            "entries": [asdict(e) for e in self.entries],
        }
        self.path.write_text(json.dumps(payload, indent=1, sort_keys=True))
        return self.path

    @staticmethod
    def load(path: Path | str) -> "DatasetManifest":
        path = Path(path)
        if path.is_dir():
            path = path / "manifest.json"
        payload = json.loads(path.read_text())
        if payload.get("version") != MANIFEST_VERSION:
            raise ValueError(f"unsupported manifest version: {payload.get('version')!r}")
        return DatasetManifest(
            root=path.parent,
            seed=int(payload["seed"]),
            image_size=int(payload["image_size"]),
            entries=[ManifestEntry(**e) for e in payload["entries"]],
        )


def subset_manifest(
    manifest: DatasetManifest, style_ids: list[str], out_dir: Path | str
) -> DatasetManifest:
    """Write a manifest covering only `style_ids`, with paths pointing back
    into the source dataset. Used to split one world into paired and
    unpaired halves without copying images."""
    known = set(manifest.style_ids())
    missing = [s for s in style_ids if s not in known]
    if missing:
        raise ValueError(f"styles not in manifest: {missing}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rel = Path(os.path.relpath(manifest.root, out_dir))
    entries = [
        ManifestEntry(
            style_id=e.style_id,
            glyph_id=e.glyph_id,
            split=e.split,
            glyph_path=str(rel / e.glyph_path),
            style_path=str(rel / e.style_path),
        )
        for e in manifest.entries
        if e.style_id in style_ids
    ]
    sub = DatasetManifest(
        root=out_dir, seed=manifest.seed, image_size=manifest.image_size, entries=entries
    )
    sub.save()
    return sub


def train_count(n_glyphs: int) -> int:
    """Per-style train-set size: nearest integer to the 0.87 fraction."""
    n_train = int(round(TRAIN_FRACTION * n_glyphs))
    return min(max(n_train, 1), n_glyphs - 1)


def manifest_sha256(manifest: DatasetManifest) -> str:
    return hashlib.sha256(manifest.path.read_bytes()).hexdigest()
