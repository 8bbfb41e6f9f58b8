"""Disentangling stylization networks.

The bundle holds three encoders, two generators and up to four patch
discriminators. The glyph encoder and the content encoder for effect
images share their final residual blocks, and both generators share their
initial residual blocks, so content codes from either domain live in one
feature space and decode through one pathway. The style encoder is
independent and feeds the effect generator through channel concatenation.
"""

from __future__ import annotations

import copy
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import torch
from torch import nn

CHECKPOINT_VERSION = 1


@dataclass
class NetConfig:
    in_channels: int = 3
    stem_width: int = 16
    content_channels: int = 64
    style_channels: int = 64
    shared_blocks: int = 2
    disc_width: int = 16
    disc_blocks: int = 3
    aug_discriminators: bool = False

    def validate(self) -> None:
        for name in ("in_channels", "stem_width", "content_channels", "style_channels", "disc_width"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.shared_blocks < 1:
            raise ValueError("shared_blocks must be >= 1")
        if self.disc_blocks < 1:
            raise ValueError("disc_blocks must be >= 1")


def _down_block(cin: int, cout: int) -> nn.Sequential:
    return nn.Sequential(
        nn.Conv2d(cin, cout, 4, stride=2, padding=1),
        nn.InstanceNorm2d(cout, affine=True),
        nn.LeakyReLU(0.2, inplace=True),
    )


def _up_block(cin: int, cout: int) -> nn.Sequential:
    return nn.Sequential(
        nn.ConvTranspose2d(cin, cout, 4, stride=2, padding=1),
        nn.InstanceNorm2d(cout, affine=True),
        nn.ReLU(inplace=True),
    )


class ResBlock(nn.Module):
    def __init__(self, channels: int):
        super().__init__()
        self.body = nn.Sequential(
            nn.Conv2d(channels, channels, 3, padding=1),
            nn.InstanceNorm2d(channels, affine=True),
            nn.ReLU(inplace=True),
            nn.Conv2d(channels, channels, 3, padding=1),
            nn.InstanceNorm2d(channels, affine=True),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return x + self.body(x)


class ResStack(nn.Module):
    def __init__(self, channels: int, n_blocks: int):
        super().__init__()
        self.blocks = nn.Sequential(*[ResBlock(channels) for _ in range(n_blocks)])

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.blocks(x)


class ImageEncoder(nn.Module):
    """Three stride-2 blocks followed by a residual stack (possibly shared)."""

    def __init__(self, in_channels: int, stem_width: int, out_channels: int, shared: ResStack):
        super().__init__()
        self.stem = nn.Sequential(
            _down_block(in_channels, stem_width),
            _down_block(stem_width, stem_width * 2),
            _down_block(stem_width * 2, out_channels),
        )
        self.shared = shared

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.dim() != 4:
            raise ValueError(f"expected a (B, C, H, W) tensor, got shape {tuple(x.shape)}")
        if x.shape[-2] % 8 or x.shape[-1] % 8:
            raise ValueError(f"image sides must be divisible by 8, got {tuple(x.shape[-2:])}")
        return self.shared(self.stem(x))


class GlyphGenerator(nn.Module):
    """Decodes a content code back into a three-plane glyph image."""

    def __init__(self, content_channels: int, stem_width: int, out_channels: int, shared: ResStack):
        super().__init__()
        self.shared = shared
        self.up = nn.Sequential(
            _up_block(content_channels, stem_width * 2),
            _up_block(stem_width * 2, stem_width),
            nn.ConvTranspose2d(stem_width, out_channels, 4, stride=2, padding=1),
        )

    def forward_with_code(self, c: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        code = self.shared(c)
        return (torch.tanh(self.up(code)) + 1.0) * 0.5, code

    def forward(self, c: torch.Tensor) -> torch.Tensor:
        return self.forward_with_code(c)[0]


class StyleGenerator(nn.Module):
    """Decodes (content code, style code) into an effect image.

    The concatenated codes are fused down to the content width first so the
    residual blocks shared with the glyph generator see the same channel
    layout in both decoders.
    """

    def __init__(
        self,
        content_channels: int,
        style_channels: int,
        stem_width: int,
        out_channels: int,
        shared: ResStack,
    ):
        super().__init__()
        self.fuse = nn.Sequential(
            nn.Conv2d(content_channels + style_channels, content_channels, 3, padding=1),
            nn.InstanceNorm2d(content_channels, affine=True),
            nn.ReLU(inplace=True),
        )
        self.shared = shared
        self.up = nn.Sequential(
            _up_block(content_channels, stem_width * 2),
            _up_block(stem_width * 2, stem_width),
            nn.ConvTranspose2d(stem_width, out_channels, 4, stride=2, padding=1),
        )

    def forward(self, c: torch.Tensor, s: torch.Tensor) -> torch.Tensor:
        if c.shape[-2:] != s.shape[-2:] or c.shape[0] != s.shape[0]:
            raise ValueError(
                f"content and style codes must align, got {tuple(c.shape)} vs {tuple(s.shape)}"
            )
        h = self.shared(self.fuse(torch.cat([c, s], dim=1)))
        return (torch.tanh(self.up(h)) + 1.0) * 0.5


class PatchDiscriminator(nn.Module):
    """Conditional patch critic: strided conv stack onto a logit grid."""

    def __init__(self, in_channels: int, width: int, n_blocks: int):
        super().__init__()
        layers: list[nn.Module] = [
            nn.Conv2d(in_channels, width, 4, stride=2, padding=1),
            nn.LeakyReLU(0.2, inplace=True),
        ]
        c = width
        for _ in range(n_blocks - 1):
            layers += [
                nn.Conv2d(c, c * 2, 4, stride=2, padding=1),
                nn.InstanceNorm2d(c * 2, affine=True),
                nn.LeakyReLU(0.2, inplace=True),
            ]
            c *= 2
        layers.append(nn.Conv2d(c, 1, 3, stride=1, padding=0))
        self.body = nn.Sequential(*layers)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.shape[-2] // 2**len_strides(self) < 3 or x.shape[-1] // 2**len_strides(self) < 3:
            raise ValueError(
                f"input {tuple(x.shape[-2:])} too small for {len_strides(self)} strided blocks"
            )
        return self.body(x)


def len_strides(disc: PatchDiscriminator) -> int:
    return sum(1 for m in disc.body if isinstance(m, nn.Conv2d) and m.stride == (2, 2))


_DISC_ARITY = {"d_x": 2, "d_y": 3, "d_x_aug": 1, "d_y_aug": 2}


class TextEffectModel(nn.Module):
    """The full encoder/generator/discriminator bundle."""

    def __init__(self, config: NetConfig):
        super().__init__()
        config.validate()
        self.config = config
        cc, cs = config.content_channels, config.style_channels
        stem, cin = config.stem_width, config.in_channels

        shared_encode = ResStack(cc, config.shared_blocks)
        shared_decode = ResStack(cc, config.shared_blocks)
        self.enc_x = ImageEncoder(cin, stem, cc, shared_encode)
        self.enc_yc = ImageEncoder(cin, stem, cc, shared_encode)
        self.enc_ys = ImageEncoder(cin, stem, cs, ResStack(cs, config.shared_blocks))
        self.gen_x = GlyphGenerator(cc, stem, cin, shared_decode)
        self.gen_y = StyleGenerator(cc, cs, stem, cin, shared_decode)

        dw, db = config.disc_width, config.disc_blocks
        self.d_x = PatchDiscriminator(cin * 2, dw, db)
        self.d_y = PatchDiscriminator(cin * 3, dw, db)
        if config.aug_discriminators:
            self.d_x_aug = PatchDiscriminator(cin, dw, db)
            self.d_y_aug = PatchDiscriminator(cin * 2, dw, db)
        else:
            self.d_x_aug = None
            self.d_y_aug = None

    # --- encoding / decoding -------------------------------------------------

    def encode_content(self, images: torch.Tensor, domain: str) -> torch.Tensor:
        """Content code of glyph images (domain 'x') or effect images ('y')."""
        if domain == "x":
            return self.enc_x(images)
        if domain == "y":
            return self.enc_yc(images)
        raise ValueError(f"domain must be 'x' or 'y', got {domain!r}")

    def encode_style(self, images: torch.Tensor) -> torch.Tensor:
        return self.enc_ys(images)

    def shared_content_code(self, c: torch.Tensor) -> torch.Tensor:
        """Feature after the generator blocks shared by both decoders."""
        return self.gen_x.shared(c)

    def generate_glyph(self, c: torch.Tensor) -> torch.Tensor:
        return self.gen_x(c)

    def generate_glyph_with_code(self, c: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        return self.gen_x.forward_with_code(c)

    def generate_style(self, c: torch.Tensor, s: torch.Tensor) -> torch.Tensor:
        return self.gen_y(c, s)

    def discriminate(self, name: str, *images: torch.Tensor) -> torch.Tensor:
        if name not in _DISC_ARITY:
            raise ValueError(f"unknown discriminator {name!r}")
        disc = getattr(self, name)
        if disc is None:
            raise ValueError(f"{name} is not enabled in this model (aug_discriminators=False)")
        if len(images) != _DISC_ARITY[name]:
            raise ValueError(f"{name} takes {_DISC_ARITY[name]} images, got {len(images)}")
        stacked = images[0] if len(images) == 1 else torch.cat(images, dim=1)
        return disc(stacked)

    # --- parameter groups ----------------------------------------------------

    def generator_parameters(self) -> list[nn.Parameter]:
        seen: dict[int, nn.Parameter] = {}
        for module in (self.enc_x, self.enc_yc, self.enc_ys, self.gen_x, self.gen_y):
            for p in module.parameters():
                seen.setdefault(id(p), p)
        return list(seen.values())

    def discriminator_parameters(self) -> list[nn.Parameter]:
        seen: dict[int, nn.Parameter] = {}
        for module in (self.d_x, self.d_y, self.d_x_aug, self.d_y_aug):
            if module is None:
                continue
            for p in module.parameters():
                seen.setdefault(id(p), p)
        return list(seen.values())


# --- single-image convenience wrappers ---------------------------------------


def _to_batch(image: np.ndarray, model: TextEffectModel) -> torch.Tensor:
    arr = np.asarray(image, dtype=np.float32)
    if arr.ndim != 3 or arr.shape[0] != model.config.in_channels:
        raise ValueError(f"expected ({model.config.in_channels}, H, W) image, got {arr.shape}")
    return torch.from_numpy(arr).unsqueeze(0)


def stylize(model: TextEffectModel, glyph: np.ndarray, style: np.ndarray) -> np.ndarray:
    """Apply the style of one effect image to a glyph image."""
    model.eval()
    with torch.no_grad():
        c = model.encode_content(_to_batch(glyph, model), "x")
        s = model.encode_style(_to_batch(style, model))
        out = model.generate_style(c, s)
    return out.squeeze(0).clamp(0.0, 1.0).numpy()


def destylize(model: TextEffectModel, style: np.ndarray) -> np.ndarray:
    """Recover the plain glyph image underneath an effect image."""
    model.eval()
    with torch.no_grad():
        out = model.generate_glyph(model.encode_content(_to_batch(style, model), "y"))
    return out.squeeze(0).clamp(0.0, 1.0).numpy()


# --- checkpoints --------------------------------------------------------------


def save_checkpoint(model: TextEffectModel, path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save(
        {
            "version": CHECKPOINT_VERSION,
            "config": asdict(model.config),
            "state": model.state_dict(),
        },
        path,
    )
    return path


def load_checkpoint(path: Path | str) -> TextEffectModel:
    payload = torch.load(Path(path), map_location="cpu", weights_only=True)
    if payload.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version: {payload.get('version')!r}")
    model = TextEffectModel(NetConfig(**payload["config"]))
    expected = model.state_dict()
    state = payload["state"]
    if set(state) != set(expected):
        missing = sorted(set(expected) - set(state))[:3]
        extra = sorted(set(state) - set(expected))[:3]
        raise ValueError(f"checkpoint key mismatch (missing {missing}, unexpected {extra})")
    for key, tensor in state.items():
        if tuple(tensor.shape) != tuple(expected[key].shape):
            raise ValueError(
                f"shape mismatch for {key}: checkpoint {tuple(tensor.shape)} vs model {tuple(expected[key].shape)}"
            )
    model.load_state_dict(state)
    return model


def clone_model(model: TextEffectModel) -> TextEffectModel:
    out = TextEffectModel(copy.deepcopy(model.config))
    out.load_state_dict(copy.deepcopy(model.state_dict()))
    return out
