"""Training objectives.

Reconstruction-style terms are weighted per-element mean L1. Adversarial
terms use the non-saturating cross-entropy form on patch logits: the critic
minimizes the average of its real and fake binary cross entropies, the
generator minimizes the cross entropy of its fakes against the real label.
Each function returns its weight already applied, so totals are plain sums.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Optional

import torch
import torch.nn.functional as F

from .net import TextEffectModel

MODES = ("core", "unsupervised-finetune", "semisupervised")


@dataclass
class LossWeights:
    gly: float = 100.0
    dpix: float = 100.0
    dfeat: float = 10.0
    dadv: float = 1.0
    spix: float = 100.0
    sadv: float = 1.0
    srec: float = 100.0
    daug: float = 1.0
    saug: float = 1.0
    # strokes are explicit user constraints; they must outpull the
    # reconstruction terms wherever they land, or a correction painted over
    # a misread region loses to the model's own bad estimate
    guid: float = 1000.0

    def validate(self) -> None:
        for f in fields(self):
            v = getattr(self, f.name)
            if not (v >= 0.0):
                raise ValueError(f"loss weight {f.name} must be >= 0, got {v}")


@dataclass
class Batch:
    """Tensors one optimization step consumes.

    `x`, `y`, `y_prime` are the paired triple. The `unpaired_*` fields feed
    the augmentation critics in semisupervised mode: glyphs with no effect
    counterpart and same-style effect pairs with no glyph counterpart.
    Masks, when present, guide the destylization of `y`.
    """

    x: torch.Tensor
    y: torch.Tensor
    y_prime: torch.Tensor
    unpaired_x: Optional[torch.Tensor] = None
    unpaired_y: Optional[torch.Tensor] = None
    unpaired_y_prime: Optional[torch.Tensor] = None
    mask_fg: Optional[torch.Tensor] = None
    mask_bg: Optional[torch.Tensor] = None


def _l1(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    return (a - b).abs().mean()


def _bce(logits: torch.Tensor, real: bool) -> torch.Tensor:
    target = torch.ones_like(logits) if real else torch.zeros_like(logits)
    return F.binary_cross_entropy_with_logits(logits, target)


def critic_loss(real_logits: torch.Tensor, fake_logits: torch.Tensor) -> torch.Tensor:
    return 0.5 * (_bce(real_logits, True) + _bce(fake_logits, False))


def generator_adv_loss(fake_logits: torch.Tensor) -> torch.Tensor:
    return _bce(fake_logits, True)


def glyph_autoencoder_loss(model: TextEffectModel, x: torch.Tensor, w: LossWeights) -> torch.Tensor:
    """Glyph autoencoding: x encoded and decoded back should return x."""
    rec = model.generate_glyph(model.encode_content(x, "x"))
    return w.gly * _l1(rec, x)


def destylize_pixel_loss(
    model: TextEffectModel, x: torch.Tensor, y: torch.Tensor, w: LossWeights
) -> torch.Tensor:
    """Destylization should recover the paired glyph image of y."""
    pred = model.generate_glyph(model.encode_content(y, "y"))
    return w.dpix * _l1(pred, x)


def destylize_feature_loss(
    model: TextEffectModel, x: torch.Tensor, y: torch.Tensor, w: LossWeights
) -> torch.Tensor:
    """Content codes of y should match those of x in shared decoder space.

    The glyph-side code is a detached target: this term trains the effect
    content encoder toward the glyph encoder, never the other way around.
    """
    target = model.shared_content_code(model.encode_content(x, "x")).detach()
    pred = model.shared_content_code(model.encode_content(y, "y"))
    return w.dfeat * _l1(pred, target)


def destylize_adv_loss(
    model: TextEffectModel, x: torch.Tensor, y: torch.Tensor, w: LossWeights
) -> tuple[torch.Tensor, torch.Tensor]:
    """Conditional adversarial pressure on destylized glyphs.

    Returns (generator term, critic term); the critic sees fakes detached.
    """
    fake = model.generate_glyph(model.encode_content(y, "y"))
    real_logits = model.discriminate("d_x", x, y)
    gen = w.dadv * generator_adv_loss(model.discriminate("d_x", fake, y))
    disc = w.dadv * critic_loss(real_logits, model.discriminate("d_x", fake.detach(), y))
    return gen, disc


def stylize_pixel_loss(
    model: TextEffectModel,
    x: torch.Tensor,
    y: torch.Tensor,
    y_prime: torch.Tensor,
    w: LossWeights,
) -> torch.Tensor:
    """Stylizing x with the style of y' should reproduce y."""
    pred = model.generate_style(model.encode_content(x, "x"), model.encode_style(y_prime))
    return w.spix * _l1(pred, y)


def stylize_adv_loss(
    model: TextEffectModel,
    x: torch.Tensor,
    y: torch.Tensor,
    y_prime: torch.Tensor,
    w: LossWeights,
) -> tuple[torch.Tensor, torch.Tensor]:
    """Adversarial pressure on stylized outputs, conditioned on (x, y')."""
    fake = model.generate_style(model.encode_content(x, "x"), model.encode_style(y_prime))
    real_logits = model.discriminate("d_y", x, y, y_prime)
    gen = w.sadv * generator_adv_loss(model.discriminate("d_y", x, fake, y_prime))
    disc = w.sadv * critic_loss(real_logits, model.discriminate("d_y", x, fake.detach(), y_prime))
    return gen, disc


def style_reconstruction_loss(model: TextEffectModel, y: torch.Tensor, w: LossWeights) -> torch.Tensor:
    """y restyled with its own content and style codes should return y."""
    rec = model.generate_style(model.encode_content(y, "y"), model.encode_style(y))
    return w.srec * _l1(rec, y)


def aug_adv_losses(
    model: TextEffectModel,
    x: torch.Tensor,
    y: torch.Tensor,
    y_prime: torch.Tensor,
    w: LossWeights,
) -> tuple[tuple[torch.Tensor, torch.Tensor], tuple[torch.Tensor, torch.Tensor]]:
    """Unconditional critics for unpaired data.

    The glyph-side critic judges destylized glyphs against real unpaired
    glyphs; the effect-side critic judges stylizations of unpaired glyphs,
    shown together with the style reference. Returns ((gen, critic) for the
    glyph side, (gen, critic) for the effect side). Requires a model built
    with augmentation discriminators.
    """
    if model.d_x_aug is None or model.d_y_aug is None:
        raise ValueError("augmentation discriminators are not enabled in this model")
    fake_x = model.generate_glyph(model.encode_content(y, "y"))
    gen_x = w.daug * generator_adv_loss(model.discriminate("d_x_aug", fake_x))
    disc_x = w.daug * critic_loss(
        model.discriminate("d_x_aug", x), model.discriminate("d_x_aug", fake_x.detach())
    )
    fake_y = model.generate_style(model.encode_content(x, "x"), model.encode_style(y_prime))
    gen_y = w.saug * generator_adv_loss(model.discriminate("d_y_aug", fake_y, y_prime))
    disc_y = w.saug * critic_loss(
        model.discriminate("d_y_aug", y, y_prime),
        model.discriminate("d_y_aug", fake_y.detach(), y_prime),
    )
    return (gen_x, disc_x), (gen_y, disc_y)


def guidance_loss(
    model: TextEffectModel,
    y: torch.Tensor,
    mask_fg: torch.Tensor,
    mask_bg: torch.Tensor,
    w: LossWeights,
) -> torch.Tensor:
    """Pull the destylized glyph plane toward user strokes.

    `mask_fg` marks pixels that must be glyph, `mask_bg` pixels that must be
    background; they are binary, broadcastable to (B, 1, H, W), and may not
    overlap. Only the binary glyph plane of the prediction is constrained.
    Each term averages over the pixels its own mask covers, so a handful of
    strokes constrains as firmly as a full mask; otherwise sparse strokes
    would be drowned out by the reconstruction terms.
    """
    mask_fg = mask_fg.to(y.dtype)
    mask_bg = mask_bg.to(y.dtype)
    for name, m in (("mask_fg", mask_fg), ("mask_bg", mask_bg)):
        if not torch.logical_or(m == 0.0, m == 1.0).all():
            raise ValueError(f"{name} must be binary")
    if (mask_fg * mask_bg).any():
        raise ValueError("guidance masks overlap")
    pred = model.generate_glyph(model.encode_content(y, "y"))[:, :1]
    return w.guid * guidance_terms(pred, mask_fg, mask_bg)


def guidance_terms(
    pred_plane: torch.Tensor, mask_fg: torch.Tensor, mask_bg: torch.Tensor
) -> torch.Tensor:
    """Unweighted guidance penalty on an already-predicted glyph plane."""
    fg_count = mask_fg.expand_as(pred_plane).sum().clamp_min(1.0)
    bg_count = mask_bg.expand_as(pred_plane).sum().clamp_min(1.0)
    fg_term = (pred_plane * mask_fg - mask_fg).abs().sum() / fg_count
    bg_term = (pred_plane * mask_bg).abs().sum() / bg_count
    return fg_term + bg_term


@dataclass
class Objective:
    gen_total: torch.Tensor
    disc_total: torch.Tensor
    parts: dict[str, torch.Tensor]


def total_objective(model: TextEffectModel, batch: Batch, w: LossWeights, mode: str) -> Objective:
    """Full objective for one batch under the given training mode.

    Core mode uses the supervised terms only. Unsupervised finetune adds
    style reconstruction and, when masks are present, guidance.
    Semisupervised adds the augmentation critics on the unpaired tensors.
    Terms absent from a mode are never computed, so they contribute no
    gradient at all.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    w.validate()
    parts: dict[str, torch.Tensor] = {}
    parts["gly"] = glyph_autoencoder_loss(model, batch.x, w)
    parts["dpix"] = destylize_pixel_loss(model, batch.x, batch.y, w)
    parts["dfeat"] = destylize_feature_loss(model, batch.x, batch.y, w)
    parts["dadv_gen"], parts["dadv_disc"] = destylize_adv_loss(model, batch.x, batch.y, w)
    parts["spix"] = stylize_pixel_loss(model, batch.x, batch.y, batch.y_prime, w)
    parts["sadv_gen"], parts["sadv_disc"] = stylize_adv_loss(model, batch.x, batch.y, batch.y_prime, w)

    if mode == "unsupervised-finetune":
        parts["srec"] = style_reconstruction_loss(model, batch.y, w)
        if (batch.mask_fg is None) != (batch.mask_bg is None):
            raise ValueError("guidance needs both masks or neither")
        if batch.mask_fg is not None:
            parts["guid"] = guidance_loss(model, batch.y, batch.mask_fg, batch.mask_bg, w)
    elif mode == "semisupervised":
        if batch.unpaired_x is None or batch.unpaired_y is None or batch.unpaired_y_prime is None:
            raise ValueError("semisupervised mode needs unpaired_x, unpaired_y, unpaired_y_prime")
        (g_x, d_x), (g_y, d_y) = aug_adv_losses(
            model, batch.unpaired_x, batch.unpaired_y, batch.unpaired_y_prime, w
        )
        parts["daug_gen"], parts["daug_disc"] = g_x, d_x
        parts["saug_gen"], parts["saug_disc"] = g_y, d_y

    gen_total = sum(v for k, v in parts.items() if not k.endswith("_disc"))
    disc_total = sum(v for k, v in parts.items() if k.endswith("_disc"))
    return Objective(gen_total=gen_total, disc_total=disc_total, parts=parts)
