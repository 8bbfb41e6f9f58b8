"""Model evaluation: metric reports over a manifest and a feature probe.

Stylization protocol: for each test entry, the glyph is stylized against a
train-split reference of the same style (picked deterministically from the
report seed) and compared to the ground-truth effect image. The probe
trains identical small classifiers on content codes, style codes and the
bottleneck of a plain autoencoder, for glyph and style targets, to measure
which information each feature space actually carries.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
import torch
from torch import nn

from .data.loader import load_entry_arrays
from .data.manifest import DatasetManifest, manifest_sha256
from .metrics import PerceptualBackbone, perceptual, psnr, ssim, style_metric
from .net import TextEffectModel

# --- manifest evaluation -------------------------------------------------------


@dataclass
class ImageMetrics:
    style_id: str
    glyph_id: str
    psnr: float
    ssim: float
    perceptual: float
    style: float


@dataclass
class MetricReport:
    model_tag: str
    manifest_hash: str
    rows: list[ImageMetrics] = field(default_factory=list)

    @property
    def means(self) -> dict[str, float]:
        if not self.rows:
            return {}
        return {
            key: float(np.mean([getattr(r, key) for r in self.rows]))
            for key in ("psnr", "ssim", "perceptual", "style")
        }

    def to_json(self) -> str:
        return json.dumps(
            {
                "model_tag": self.model_tag,
                "manifest_hash": self.manifest_hash,
                "means": self.means,
                "rows": [asdict(r) for r in self.rows],
            },
            indent=1,
            sort_keys=True,
        )

    def render_table(self) -> str:
        header = f"{'style':<10} {'glyph':<8} {'psnr':>8} {'ssim':>7} {'percep':>9} {'style':>9}"
        lines = [header, "-" * len(header)]
        for r in self.rows:
            lines.append(
                f"{r.style_id:<10} {r.glyph_id:<8} {r.psnr:>8.3f} {r.ssim:>7.4f} "
                f"{r.perceptual:>9.4f} {r.style:>9.5f}"
            )
        m = self.means
        lines.append("-" * len(header))
        lines.append(
            f"{'mean':<10} {'':<8} {m['psnr']:>8.3f} {m['ssim']:>7.4f} "
            f"{m['perceptual']:>9.4f} {m['style']:>9.5f}"
        )
        return "\n".join(lines)


def _reference_for(row: dict, train_rows: list[dict], rng: np.random.Generator) -> dict:
    peers = [
        t
        for t in train_rows
        if t["style_id"] == row["style_id"] and t["glyph_id"] != row["glyph_id"]
    ]
    if not peers:
        raise ValueError(f"style {row['style_id']!r} has no train-split reference")
    return peers[rng.integers(len(peers))]


def _stylize_rows(
    model: TextEffectModel, manifest: DatasetManifest, split: str, seed: int
) -> list[tuple[dict, np.ndarray]]:
    rows = load_entry_arrays(manifest, split)
    train_rows = load_entry_arrays(manifest, "train")
    rng = np.random.default_rng(seed)
    model.eval()
    out = []
    with torch.no_grad():
        for row in rows:
            ref = _reference_for(row, train_rows, rng)
            c = model.encode_content(torch.from_numpy(row["x"]).unsqueeze(0), "x")
            s = model.encode_style(torch.from_numpy(ref["y"]).unsqueeze(0))
            pred = model.generate_style(c, s).squeeze(0).clamp(0.0, 1.0).numpy()
            out.append((row, pred))
    return out


def stylization_l1(
    model: TextEffectModel, manifest: DatasetManifest, split: str = "test", seed: int = 0
) -> float:
    """Mean absolute error of stylized test glyphs against ground truth."""
    pairs = _stylize_rows(model, manifest, split, seed)
    return float(np.mean([np.abs(pred - row["y"]).mean() for row, pred in pairs]))


def destylization_psnr(
    model: TextEffectModel, manifest: DatasetManifest, split: str = "test"
) -> float:
    """Mean PSNR of destylized effect images against their glyph images."""
    rows = load_entry_arrays(manifest, split)
    model.eval()
    vals = []
    with torch.no_grad():
        for row in rows:
            pred = (
                model.generate_glyph(
                    model.encode_content(torch.from_numpy(row["y"]).unsqueeze(0), "y")
                )
                .squeeze(0)
                .clamp(0.0, 1.0)
                .numpy()
            )
            vals.append(psnr(pred, row["x"]))
    return float(np.mean(vals))


def evaluate_manifest(
    model: TextEffectModel,
    manifest: DatasetManifest,
    backbone: PerceptualBackbone,
    model_tag: str = "",
    seed: int = 0,
) -> MetricReport:
    """Stylize every test entry and score it with all four metrics."""
    report = MetricReport(model_tag=model_tag, manifest_hash=manifest_sha256(manifest))
    for row, pred in _stylize_rows(model, manifest, "test", seed):
        report.rows.append(
            ImageMetrics(
                style_id=row["style_id"],
                glyph_id=row["glyph_id"],
                psnr=psnr(pred, row["y"]),
                ssim=ssim(pred, row["y"]),
                perceptual=perceptual(pred, row["y"], backbone),
                style=style_metric(pred, row["y"], backbone),
            )
        )
    return report


# --- disentanglement probe -----------------------------------------------------


class _ProbeClassifier(nn.Module):
    """Five layers: three convs then two linear layers."""

    def __init__(self, in_channels: int, spatial: int, n_classes: int):
        super().__init__()
        self.net = nn.Sequential(
            nn.Conv2d(in_channels, 32, 3, stride=2, padding=1),
            nn.ReLU(inplace=True),
            nn.Conv2d(32, 64, 3, stride=2, padding=1),
            nn.ReLU(inplace=True),
            nn.Conv2d(64, 64, 3, padding=1),
            nn.ReLU(inplace=True),
            nn.Flatten(),
            nn.Linear(64 * max(1, spatial // 4) ** 2, 64),
            nn.ReLU(inplace=True),
            nn.Linear(64, n_classes),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.net(x)


class _ProbeAutoencoder(nn.Module):
    """Plain convolutional autoencoder whose bottleneck is the AE feature."""

    def __init__(self, channels: int):
        super().__init__()
        self.encoder = nn.Sequential(
            nn.Conv2d(3, channels // 4, 4, stride=2, padding=1),
            nn.ReLU(inplace=True),
            nn.Conv2d(channels // 4, channels // 2, 4, stride=2, padding=1),
            nn.ReLU(inplace=True),
            nn.Conv2d(channels // 2, channels, 4, stride=2, padding=1),
            nn.ReLU(inplace=True),
        )
        self.decoder = nn.Sequential(
            nn.ConvTranspose2d(channels, channels // 2, 4, stride=2, padding=1),
            nn.ReLU(inplace=True),
            nn.ConvTranspose2d(channels // 2, channels // 4, 4, stride=2, padding=1),
            nn.ReLU(inplace=True),
            nn.ConvTranspose2d(channels // 4, 3, 4, stride=2, padding=1),
            nn.Sigmoid(),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.decoder(self.encoder(x))


@dataclass
class ProbeResult:
    curves: dict[str, list[tuple[int, float]]]
    final: dict[str, float]


def _train_classifier(
    feats_train: torch.Tensor,
    labels_train: torch.Tensor,
    feats_eval: torch.Tensor,
    labels_eval: torch.Tensor,
    n_classes: int,
    budget: int,
    eval_every: int,
    seed: int,
) -> list[tuple[int, float]]:
    torch.manual_seed(seed)
    clf = _ProbeClassifier(feats_train.shape[1], feats_train.shape[-1], n_classes)
    opt = torch.optim.Adam(clf.parameters(), lr=1e-3)
    ce = nn.CrossEntropyLoss()
    curve = []
    for step in range(1, budget + 1):
        opt.zero_grad()
        loss = ce(clf(feats_train), labels_train)
        loss.backward()
        opt.step()
        if step % eval_every == 0 or step == budget:
            with torch.no_grad():
                acc = float((clf(feats_eval).argmax(dim=1) == labels_eval).float().mean())
            curve.append((step, acc))
    return curve


def probe_disentanglement(
    model: TextEffectModel,
    manifest: DatasetManifest,
    budget: int = 200,
    ae_budget: int = 300,
    seed: int = 0,
    labels: Optional[dict[tuple[str, str], int]] = None,
) -> ProbeResult:
    """Measure what content codes, style codes and an AE bottleneck encode.

    Trains one classifier per (feature source, target) pair and reports its
    accuracy curve. Style classifiers train on train-split glyph images and
    evaluate on test-split glyphs; glyph classifiers train on the first
    style and evaluate on the remaining styles, so both always score on
    unseen combinations. `labels` substitutes arbitrary integer targets for
    both tasks (keyed by (style_id, glyph_id)), for calibration runs.

    Returns six curves keyed `<target>_acc_<source>` with sources
    content/style/ae and targets glyph/style.
    """
    rows = load_entry_arrays(manifest, "train") + load_entry_arrays(manifest, "test")
    split_of = {(e.style_id, e.glyph_id): e.split for e in manifest.entries}
    style_ids = sorted({r["style_id"] for r in rows})
    glyph_ids = sorted({r["glyph_id"] for r in rows})
    if len(style_ids) < 2:
        raise ValueError("probe needs at least two styles")
    if len(glyph_ids) < 2:
        raise ValueError("probe needs at least two glyphs")

    images = torch.from_numpy(np.stack([r["y"] for r in rows]))
    model.eval()
    with torch.no_grad():
        content_feats = model.encode_content(images, "y")
        style_feats = model.encode_style(images)

    torch.manual_seed(seed)
    ae = _ProbeAutoencoder(model.config.content_channels)
    opt = torch.optim.Adam(ae.parameters(), lr=1e-3)
    train_mask = torch.tensor(
        [split_of[(r["style_id"], r["glyph_id"])] == "train" for r in rows]
    )
    ae_train = images[train_mask]
    for _ in range(ae_budget):
        opt.zero_grad()
        loss = (ae(ae_train) - ae_train).abs().mean()
        loss.backward()
        opt.step()
    with torch.no_grad():
        ae_feats = ae.encoder(images)

    if labels is not None:
        style_labels = torch.tensor([labels[(r["style_id"], r["glyph_id"])] for r in rows])
        glyph_labels = style_labels.clone()
        n_style_classes = n_glyph_classes = int(style_labels.max()) + 1
    else:
        style_labels = torch.tensor([style_ids.index(r["style_id"]) for r in rows])
        glyph_labels = torch.tensor([glyph_ids.index(r["glyph_id"]) for r in rows])
        n_style_classes, n_glyph_classes = len(style_ids), len(glyph_ids)

    first_style = torch.tensor([r["style_id"] == style_ids[0] for r in rows])
    splits = {
        "style": (train_mask, ~train_mask, style_labels, n_style_classes),
        "glyph": (first_style, ~first_style, glyph_labels, n_glyph_classes),
    }
    sources = {"content": content_feats, "style": style_feats, "ae": ae_feats}

    curves: dict[str, list[tuple[int, float]]] = {}
    eval_every = max(1, budget // 20)
    for t_i, (target, (fit_mask, eval_mask, y, n_classes)) in enumerate(splits.items()):
        for s_i, (source, feats) in enumerate(sources.items()):
            curve = _train_classifier(
                feats[fit_mask],
                y[fit_mask],
                feats[eval_mask],
                y[eval_mask],
                n_classes,
                budget,
                eval_every,
                seed + 10 * t_i + s_i,
            )
            curves[f"{target}_acc_{source}"] = curve
    return ProbeResult(curves=curves, final={k: v[-1][1] for k, v in curves.items()})
