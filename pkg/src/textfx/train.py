"""Training loops, finetuning, interpolation and the two-model pipeline.

All loops share one step shape: a single generator-side forward, a critic
update on detached fakes, then a generator update whose adversarial terms
see the refreshed critics. Runs are reproducible from (config, seed): the
data stream, crop positions and torch initialization all derive from the
run seed. A non-finite loss aborts immediately with a diagnostic dump.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
import torch

from .data.loader import TripleBatch, load_triples
from .data.manifest import DatasetManifest
from .data.transform import glyph_image_from_mask
from .losses import Batch, LossWeights, critic_loss, generator_adv_loss, guidance_terms
from .net import (
    NetConfig,
    TextEffectModel,
    clone_model,
    destylize,
    load_checkpoint,
    save_checkpoint,
    stylize,
)

logger = logging.getLogger(__name__)

TRAIN_MODES = ("core", "semisupervised")


class TrainingDiverged(RuntimeError):
    """Raised when any loss term stops being finite."""


@dataclass
class RunConfig:
    data_root: str
    out_dir: str
    mode: str = "core"
    unpaired_root: Optional[str] = None
    iterations: int = 2000
    batch_size: int = 8
    crop_size: Optional[int] = None
    seed: int = 0
    lr: float = 2e-4
    beta1: float = 0.5
    beta2: float = 0.999
    checkpoint_every: int = 500
    unpaired_every: int = 1
    weights: LossWeights = field(default_factory=LossWeights)
    net: NetConfig = field(default_factory=NetConfig)

    def validate(self) -> None:
        if self.mode not in TRAIN_MODES:
            raise ValueError(f"mode must be one of {TRAIN_MODES}, got {self.mode!r}")
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.crop_size is not None and self.crop_size < 8:
            raise ValueError(f"crop_size must be >= 8, got {self.crop_size}")
        if self.checkpoint_every < 1:
            raise ValueError("checkpoint_every must be >= 1")
        if self.unpaired_every < 1:
            raise ValueError("unpaired_every must be >= 1")
        self.weights.validate()
        self.net.validate()

    def to_json(self) -> str:
        payload = asdict(self)
        for key in ("data_root", "out_dir", "unpaired_root"):
            if payload[key] is not None:
                payload[key] = str(payload[key])
        return json.dumps(payload, indent=1, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "RunConfig":
        payload = json.loads(text)
        payload["weights"] = LossWeights(**payload.get("weights", {}))
        payload["net"] = NetConfig(**payload.get("net", {}))
        for key in ("data_root", "out_dir", "unpaired_root"):
            if payload.get(key) is not None:
                payload[key] = Path(payload[key])
        return RunConfig(**payload)


@dataclass
class TrainResult:
    model: TextEffectModel
    checkpoint_path: Path
    run_dir: Path
    history: list[dict]


def default_crop_size(side: int) -> int:
    """Finetuning crop: half the side for large references, rounded to a
    multiple of 8, but the full frame for small ones.

    Crops of a small image carry normalization statistics unlike the full
    frame the model will infer on, which visibly shifts the glyph boundary;
    only references comfortably above the 64 px scale benefit from crop
    augmentation.
    """
    if side <= 64:
        return side
    return max(64, side // 2 // 8 * 8)


def sample_crop(rng: np.random.Generator, side: int, crop: int) -> tuple[int, int]:
    if crop > side:
        raise ValueError(f"crop {crop} exceeds image side {side}")
    if crop == side:
        return 0, 0
    return int(rng.integers(0, side - crop + 1)), int(rng.integers(0, side - crop + 1))


class Trainer:
    """One alternating critic/generator step over Batch tensors."""

    def __init__(
        self,
        model: TextEffectModel,
        weights: LossWeights,
        mode: str = "core",
        lr: float = 2e-4,
        betas: tuple[float, float] = (0.5, 0.999),
    ):
        weights.validate()
        self.model = model
        self.w = weights
        self.mode = mode
        self.opt_g = torch.optim.Adam(model.generator_parameters(), lr=lr, betas=betas)
        self.opt_d = torch.optim.Adam(model.discriminator_parameters(), lr=lr, betas=betas)

    def iteration(self, batch: Batch) -> dict[str, float]:
        m, w = self.model, self.w
        x, y, yp = batch.x, batch.y, batch.y_prime

        # single generator-side forward
        c_x = m.encode_content(x, "x")
        rec, code_x = m.generate_glyph_with_code(c_x)
        c_y = m.encode_content(y, "y")
        dest, code_y = m.generate_glyph_with_code(c_y)
        s_p = m.encode_style(yp)
        sty = m.generate_style(c_x, s_p)

        u_dest = u_sty = None
        if self.mode == "semisupervised" and batch.unpaired_y is not None:
            u_dest = m.generate_glyph(m.encode_content(batch.unpaired_y, "y"))
            u_sty = m.generate_style(
                m.encode_content(batch.unpaired_x, "x"), m.encode_style(batch.unpaired_y_prime)
            )

        parts: dict[str, torch.Tensor] = {}

        # critic step on detached fakes
        parts["dadv_disc"] = w.dadv * critic_loss(
            m.discriminate("d_x", x, y), m.discriminate("d_x", dest.detach(), y)
        )
        parts["sadv_disc"] = w.sadv * critic_loss(
            m.discriminate("d_y", x, y, yp), m.discriminate("d_y", x, sty.detach(), yp)
        )
        if u_dest is not None:
            parts["daug_disc"] = w.daug * critic_loss(
                m.discriminate("d_x_aug", batch.unpaired_x),
                m.discriminate("d_x_aug", u_dest.detach()),
            )
            parts["saug_disc"] = w.saug * critic_loss(
                m.discriminate("d_y_aug", batch.unpaired_y, batch.unpaired_y_prime),
                m.discriminate("d_y_aug", u_sty.detach(), batch.unpaired_y_prime),
            )
        disc_total = sum(v for k, v in parts.items() if k.endswith("_disc"))
        self._check_finite(parts, batch)
        self.opt_d.zero_grad(set_to_none=True)
        disc_total.backward()
        self.opt_d.step()

        # generator step against the refreshed critics
        parts["gly"] = w.gly * (rec - x).abs().mean()
        parts["dpix"] = w.dpix * (dest - x).abs().mean()
        parts["dfeat"] = w.dfeat * (code_y - code_x.detach()).abs().mean()
        parts["spix"] = w.spix * (sty - y).abs().mean()
        parts["dadv_gen"] = w.dadv * generator_adv_loss(m.discriminate("d_x", dest, y))
        parts["sadv_gen"] = w.sadv * generator_adv_loss(m.discriminate("d_y", x, sty, yp))
        if self.mode == "unsupervised-finetune":
            srec = m.generate_style(c_y, m.encode_style(y))
            parts["srec"] = w.srec * (srec - y).abs().mean()
            if batch.mask_fg is not None:
                parts["guid"] = w.guid * guidance_terms(dest[:, :1], batch.mask_fg, batch.mask_bg)
        if u_dest is not None:
            parts["daug_gen"] = w.daug * generator_adv_loss(m.discriminate("d_x_aug", u_dest))
            parts["saug_gen"] = w.saug * generator_adv_loss(
                m.discriminate("d_y_aug", u_sty, batch.unpaired_y_prime)
            )
        gen_total = sum(v for k, v in parts.items() if not k.endswith("_disc"))
        self._check_finite(parts, batch)
        self.opt_g.zero_grad(set_to_none=True)
        gen_total.backward()
        self.opt_g.step()

        return {k: float(v.detach()) for k, v in parts.items()}

    def _check_finite(self, parts: dict[str, torch.Tensor], batch: Batch) -> None:
        bad = [k for k, v in parts.items() if not torch.isfinite(v)]
        if bad:
            raise TrainingDiverged(
                f"non-finite loss terms {bad}; batch stats: "
                + json.dumps(_batch_stats(batch))
            )


def _batch_stats(batch: Batch) -> dict:
    out = {}
    for name in ("x", "y", "y_prime"):
        t = getattr(batch, name)
        if t is not None:
            out[name] = {
                "min": float(t.min()),
                "max": float(t.max()),
                "mean": float(t.mean()),
            }
    return out


def _crop_triple(
    rng: np.random.Generator, x: torch.Tensor, y: torch.Tensor, yp: torch.Tensor, crop: int
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """Co-located crops of (x, y); y' cropped at an independent position."""
    side = x.shape[-1]
    outs_x, outs_y, outs_p = [], [], []
    for b in range(x.shape[0]):
        i, j = sample_crop(rng, side, crop)
        outs_x.append(x[b : b + 1, :, i : i + crop, j : j + crop])
        outs_y.append(y[b : b + 1, :, i : i + crop, j : j + crop])
        i2, j2 = sample_crop(rng, side, crop)
        outs_p.append(yp[b : b + 1, :, i2 : i2 + crop, j2 : j2 + crop])
    return torch.cat(outs_x), torch.cat(outs_y), torch.cat(outs_p)


class _RunLogger:
    def __init__(self, run_dir: Path):
        run_dir.mkdir(parents=True, exist_ok=True)
        self.path = run_dir / "log.jsonl"
        self._fh = self.path.open("w")
        self.history: list[dict] = []

    def log(self, iteration: int, parts: dict[str, float], wall_time: float) -> None:
        row = {"iteration": iteration, "wall_time": round(wall_time, 4), **parts}
        self._fh.write(json.dumps(row) + "\n")
        self.history.append(row)

    def close(self) -> None:
        self._fh.flush()
        self._fh.close()


def _to_tensor(arr: np.ndarray) -> torch.Tensor:
    return torch.from_numpy(np.ascontiguousarray(arr, dtype=np.float32))


def _run_loop(
    model: TextEffectModel,
    config: RunConfig,
    paired_stream: Iterable[TripleBatch],
    unpaired_stream: Optional[Iterable[TripleBatch]],
    eval_hook: Optional[Callable[[int, TextEffectModel], None]] = None,
    eval_iters: Sequence[int] = (),
) -> TrainResult:
    run_dir = Path(config.out_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "config.json").write_text(config.to_json())
    ckpt_dir = run_dir / "checkpoints"
    trainer = Trainer(
        model, config.weights, mode=config.mode, lr=config.lr, betas=(config.beta1, config.beta2)
    )
    crop_rng = np.random.default_rng(config.seed + 1)
    out_log = _RunLogger(run_dir)
    eval_set = set(eval_iters)
    started = time.perf_counter()
    last_path = ckpt_dir / "ckpt_final.pt"
    try:
        for it in range(1, config.iterations + 1):
            tb = next(paired_stream)
            x, y, yp = _to_tensor(tb.x), _to_tensor(tb.y), _to_tensor(tb.y_prime)
            if config.crop_size is not None and config.crop_size < x.shape[-1]:
                x, y, yp = _crop_triple(crop_rng, x, y, yp, config.crop_size)
            batch = Batch(x=x, y=y, y_prime=yp)
            if (
                config.mode == "semisupervised"
                and unpaired_stream is not None
                and (it - 1) % config.unpaired_every == 0
            ):
                ub_style = next(unpaired_stream)
                ub_glyph = next(unpaired_stream)
                # epoch-final batches may be partial; the two draws must align
                n = min(ub_glyph.x.shape[0], ub_style.y.shape[0])
                batch.unpaired_x = _to_tensor(ub_glyph.x[:n])
                batch.unpaired_y = _to_tensor(ub_style.y[:n])
                batch.unpaired_y_prime = _to_tensor(ub_style.y_prime[:n])
            try:
                parts = trainer.iteration(batch)
            except TrainingDiverged as err:
                (run_dir / "diverged.json").write_text(
                    json.dumps({"iteration": it, "error": str(err)}, indent=1)
                )
                raise
            out_log.log(it, parts, time.perf_counter() - started)
            if it % config.checkpoint_every == 0:
                save_checkpoint(model, ckpt_dir / f"ckpt_{it:06d}.pt")
            if it in eval_set and eval_hook is not None:
                eval_hook(it, model)
        save_checkpoint(model, last_path)
    finally:
        out_log.close()
    return TrainResult(model=model, checkpoint_path=last_path, run_dir=run_dir, history=out_log.history)


def train_core(
    config: RunConfig,
    eval_hook: Optional[Callable[[int, TextEffectModel], None]] = None,
    eval_iters: Sequence[int] = (),
) -> TrainResult:
    """Supervised training on paired triples."""
    config.validate()
    torch.manual_seed(config.seed)
    manifest = DatasetManifest.load(config.data_root)
    stream = load_triples(manifest, "train", config.batch_size, config.seed, loop=True)
    model = TextEffectModel(config.net)
    return _run_loop(model, config, stream, None, eval_hook, eval_iters)


def train_semisupervised(
    config: RunConfig,
    eval_hook: Optional[Callable[[int, TextEffectModel], None]] = None,
    eval_iters: Sequence[int] = (),
) -> TrainResult:
    """Paired training plus unconditional critics on unpaired data.

    Falls back to plain core training (with a warning) when no unpaired
    manifest is configured or it contains no training entries.
    """
    config.validate()
    unpaired_stream = None
    if config.unpaired_root is not None:
        unpaired = DatasetManifest.load(config.unpaired_root)
        if unpaired.select(split="train"):
            unpaired_stream = load_triples(
                unpaired, "train", config.batch_size, config.seed + 7919, loop=True
            )
    if unpaired_stream is None:
        logger.warning("no unpaired data available; running core training instead")
        config.mode = "core"
        return train_core(config, eval_hook, eval_iters)
    config.mode = "semisupervised"
    config.net.aug_discriminators = True
    torch.manual_seed(config.seed)
    manifest = DatasetManifest.load(config.data_root)
    stream = load_triples(manifest, "train", config.batch_size, config.seed, loop=True)
    model = TextEffectModel(config.net)
    return _run_loop(model, config, stream, unpaired_stream, eval_hook, eval_iters)


def _resolve_base(base: TextEffectModel | Path | str) -> TextEffectModel:
    if isinstance(base, TextEffectModel):
        return clone_model(base)
    return load_checkpoint(base)


def _finetune_loop(
    model: TextEffectModel,
    mode: str,
    make_batch: Callable[[int, np.random.Generator], Batch],
    iterations: int,
    seed: int,
    lr: float,
    out_dir: Optional[Path | str],
) -> TrainResult:
    if iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {iterations}")
    torch.manual_seed(seed)
    rng = np.random.default_rng(seed)
    trainer = Trainer(model, LossWeights(), mode=mode, lr=lr)
    run_dir = Path(out_dir) if out_dir is not None else None
    out_log = _RunLogger(run_dir) if run_dir is not None else None
    history: list[dict] = []
    started = time.perf_counter()
    for it in range(1, iterations + 1):
        parts = trainer.iteration(make_batch(it, rng))
        row = {"iteration": it, "wall_time": round(time.perf_counter() - started, 4), **parts}
        history.append(row)
        if out_log is not None:
            out_log.log(it, parts, time.perf_counter() - started)
    if out_log is not None:
        out_log.close()
    path = Path("")
    if run_dir is not None:
        path = save_checkpoint(model, run_dir / "checkpoints" / "ckpt_final.pt")
    return TrainResult(model=model, checkpoint_path=path, run_dir=run_dir or Path(""), history=history)


def finetune_supervised(
    base: TextEffectModel | Path | str,
    x: np.ndarray,
    y: np.ndarray,
    iterations: int = 500,
    crop_size: Optional[int] = None,
    batch_size: int = 4,
    seed: int = 0,
    lr: float = 2e-4,
    out_dir: Optional[Path | str] = None,
) -> TrainResult:
    """Adapt a model to one new (glyph, effect) pair via random crops.

    Crops of x and y are co-located; the style reference is an
    independently positioned crop of y. Default crop: half the side, >= 32.
    """
    model = _resolve_base(base)
    x_t, y_t = _to_tensor(np.asarray(x)), _to_tensor(np.asarray(y))
    if x_t.shape != y_t.shape:
        raise ValueError(f"x and y must share a shape, got {tuple(x_t.shape)} vs {tuple(y_t.shape)}")
    side = x_t.shape[-1]
    crop = default_crop_size(side) if crop_size is None else crop_size
    if crop > side:
        raise ValueError(f"crop {crop} exceeds image side {side}")
    if crop % 8:
        raise ValueError(f"crop size must be divisible by 8, got {crop}")
    x_b = x_t.unsqueeze(0).expand(batch_size, -1, -1, -1)
    y_b = y_t.unsqueeze(0).expand(batch_size, -1, -1, -1)

    def make_batch(_it: int, rng: np.random.Generator) -> Batch:
        xc, yc, ypc = _crop_triple(rng, x_b, y_b, y_b, crop)
        return Batch(x=xc, y=yc, y_prime=ypc)

    return _finetune_loop(model, "core", make_batch, iterations, seed, lr, out_dir)


def finetune_unsupervised(
    base: TextEffectModel | Path | str,
    y: np.ndarray,
    iterations: int = 500,
    masks: Optional[tuple[np.ndarray, np.ndarray]] = None,
    crop_size: Optional[int] = None,
    batch_size: int = 4,
    seed: int = 0,
    lr: float = 2e-4,
    out_dir: Optional[Path | str] = None,
) -> TrainResult:
    """Adapt to a single effect image with no glyph counterpart.

    Each iteration destylizes the current y with the current model and uses
    that estimate as the glyph side of the crop triple, refreshed as the
    model improves. `masks`, when given, are (foreground, background) binary
    (H, W) arrays guiding the destylized glyph plane.
    """
    model = _resolve_base(base)
    y_t = _to_tensor(np.asarray(y))
    side = y_t.shape[-1]
    crop = default_crop_size(side) if crop_size is None else crop_size
    if crop > side:
        raise ValueError(f"crop {crop} exceeds image side {side}")
    if crop % 8:
        raise ValueError(f"crop size must be divisible by 8, got {crop}")
    mask_fg_t = mask_bg_t = None
    if masks is not None:
        mask_fg, mask_bg = (np.asarray(m) for m in masks)
        if mask_fg.shape != mask_bg.shape or mask_fg.shape != tuple(y_t.shape[-2:]):
            raise ValueError("masks must both match the image extent")
        if not (np.isin(mask_fg, (0, 1)).all() and np.isin(mask_bg, (0, 1)).all()):
            raise ValueError("masks must be binary")
        if (mask_fg * mask_bg).any():
            raise ValueError("guidance masks overlap")
        mask_fg_t = _to_tensor(mask_fg[None])
        mask_bg_t = _to_tensor(mask_bg[None])
    y_full = y_t.unsqueeze(0)
    y_b = y_full.expand(batch_size, -1, -1, -1)

    def make_batch(_it: int, rng: np.random.Generator) -> Batch:
        with torch.no_grad():
            x_est = model.generate_glyph(model.encode_content(y_full, "y")).clamp(0.0, 1.0)
            if mask_fg_t is not None:
                # strokes override the self-estimate: the reconstruction
                # anchor must agree with the user, not fight the guidance
                plane = x_est[:, :1]
                keep = 1.0 - mask_fg_t - mask_bg_t
                x_est = torch.cat([plane * keep + mask_fg_t, x_est[:, 1:]], dim=1)
        x_b = x_est.expand(batch_size, -1, -1, -1)
        outs = {"x": [], "y": [], "yp": [], "mf": [], "mb": []}
        for b in range(batch_size):
            i, j = sample_crop(rng, side, crop)
            outs["x"].append(x_b[b : b + 1, :, i : i + crop, j : j + crop])
            outs["y"].append(y_b[b : b + 1, :, i : i + crop, j : j + crop])
            if mask_fg_t is not None:
                outs["mf"].append(mask_fg_t[None, :, i : i + crop, j : j + crop])
                outs["mb"].append(mask_bg_t[None, :, i : i + crop, j : j + crop])
            i2, j2 = sample_crop(rng, side, crop)
            outs["yp"].append(y_b[b : b + 1, :, i2 : i2 + crop, j2 : j2 + crop])
        return Batch(
            x=torch.cat(outs["x"]),
            y=torch.cat(outs["y"]),
            y_prime=torch.cat(outs["yp"]),
            mask_fg=torch.cat(outs["mf"]) if outs["mf"] else None,
            mask_bg=torch.cat(outs["mb"]) if outs["mb"] else None,
        )

    return _finetune_loop(model, "unsupervised-finetune", make_batch, iterations, seed, lr, out_dir)


# --- style interpolation ------------------------------------------------------


def blend_style_codes(styles: Sequence[tuple[torch.Tensor, float]]) -> torch.Tensor:
    """Weighted sum of style codes, computed in a canonical order.

    Zero-weight entries are dropped, byte-identical codes are merged (their
    weights summed in byte order), and the surviving terms are accumulated
    sorted by code bytes. The result is therefore bitwise independent of
    input order, and a single surviving unit-weight term returns its code
    exactly.
    """
    if not styles:
        raise ValueError("need at least one style")
    total = 0.0
    for code, weight in styles:
        if not np.isfinite(weight) or weight < 0.0:
            raise ValueError(f"weights must be finite and >= 0, got {weight}")
        total += float(weight)
    if abs(total - 1.0) > 1e-6:
        raise ValueError(f"weights must sum to 1 within 1e-6, got {total}")
    groups: dict[bytes, list[float]] = {}
    shapes: dict[bytes, torch.Tensor] = {}
    for code, weight in styles:
        if weight == 0.0:
            continue
        key = code.detach().cpu().numpy().tobytes()
        groups.setdefault(key, []).append(float(weight))
        shapes[key] = code
    if not groups:
        raise ValueError("all weights are zero")
    first_shape = next(iter(shapes.values())).shape
    for code in shapes.values():
        if code.shape != first_shape:
            raise ValueError("style codes must share a shape")
    blended: Optional[torch.Tensor] = None
    for key in sorted(groups):
        ws = sorted(groups[key])
        w = ws[0]
        for extra in ws[1:]:
            w += extra
        term = shapes[key] * w
        blended = term if blended is None else blended + term
    return blended


def interpolate_styles(
    model: TextEffectModel,
    content: torch.Tensor,
    styles: Sequence[tuple[torch.Tensor, float]],
) -> torch.Tensor:
    """Decode a content code against a convex blend of style codes."""
    return model.generate_style(content, blend_style_codes(styles))


def interpolate_images(
    model: TextEffectModel,
    glyph: np.ndarray,
    styles: Sequence[tuple[np.ndarray, float]],
) -> np.ndarray:
    """Image-level interpolation: encode, blend style codes, decode."""
    model.eval()
    with torch.no_grad():
        c = model.encode_content(_to_tensor(np.asarray(glyph)).unsqueeze(0), "x")
        coded = [
            (model.encode_style(_to_tensor(np.asarray(img)).unsqueeze(0)), w) for img, w in styles
        ]
        out = interpolate_styles(model, c, coded)
    return out.squeeze(0).clamp(0.0, 1.0).numpy()


# --- joint font and effect transfer -------------------------------------------


def _renormalize_glyph(planes: np.ndarray) -> np.ndarray:
    """Snap a generated glyph image back onto the three-plane manifold.

    Falls back to the raw prediction when the binary plane is degenerate
    (all foreground or all background), which happens with untrained nets.
    """
    mask = planes[0] >= 0.5
    if mask.all() or not mask.any():
        return planes
    return glyph_image_from_mask(mask).channels


def font_effect_pipeline(
    text_img: np.ndarray,
    style_img: np.ndarray,
    font_model: TextEffectModel,
    effect_model: TextEffectModel,
) -> np.ndarray:
    """Render `text_img` in the font and effect of `style_img`.

    The effect model strips the style image down to its glyph, the font
    model re-renders the input text in that glyph's font, and the effect
    model then styles the result. All three images must share a resolution.
    """
    text_img = np.asarray(text_img, dtype=np.float32)
    style_img = np.asarray(style_img, dtype=np.float32)
    if text_img.shape != style_img.shape:
        raise ValueError(
            f"text and style resolutions differ: {text_img.shape} vs {style_img.shape}"
        )
    font_ref = _renormalize_glyph(destylize(effect_model, style_img))
    refont = _renormalize_glyph(stylize(font_model, text_img, font_ref))
    return stylize(effect_model, refont, style_img)
