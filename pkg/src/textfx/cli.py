"""Command line front door: synth, train, finetune, eval, stylize, destylize, serve."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .data import DatasetManifest, load_planes_png, save_planes_png, synth_dataset
from .net import destylize, load_checkpoint, stylize
from .train import RunConfig, finetune_supervised, finetune_unsupervised, train_core


def _load(path: str) -> np.ndarray:
    return load_planes_png(Path(path))


def cmd_synth(args: argparse.Namespace) -> int:
    manifest = synth_dataset(
        n_styles=args.styles,
        n_glyphs=args.glyphs,
        size=args.size,
        seed=args.seed,
        out=Path(args.out),
    )
    print(f"wrote {len(manifest.entries)} entries under {manifest.root}")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    config = RunConfig(
        data_root=Path(args.data),
        out_dir=Path(args.out),
        mode=args.mode,
        unpaired_root=Path(args.unpaired) if args.unpaired else None,
        iterations=args.iterations,
        batch_size=args.batch_size,
        seed=args.seed,
    )
    if args.mode == "semisupervised":
        from .train import train_semisupervised

        result = train_semisupervised(config)
    else:
        result = train_core(config)
    print(f"checkpoint: {result.checkpoint_path}")
    return 0


def cmd_finetune(args: argparse.Namespace) -> int:
    if bool(args.mask_fg) != bool(args.mask_bg):
        print("error: --mask-fg and --mask-bg go together", file=sys.stderr)
        return 1
    base = load_checkpoint(Path(args.checkpoint))
    y = _load(args.style)
    if args.glyph:
        result = finetune_supervised(
            base, _load(args.glyph), y, iterations=args.iterations, seed=args.seed
        )
    else:
        masks = None
        if args.mask_fg:
            masks = (_load(args.mask_fg)[0], _load(args.mask_bg)[0])
        result = finetune_unsupervised(
            base, y, iterations=args.iterations, masks=masks, seed=args.seed
        )
    from .net import save_checkpoint

    save_checkpoint(result.model, Path(args.out))
    print(f"checkpoint: {args.out}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    from .evaluate import evaluate_manifest
    from .metrics import PerceptualBackbone

    model = load_checkpoint(Path(args.checkpoint))
    manifest = DatasetManifest.load(Path(args.data))
    backbone = (
        PerceptualBackbone.load(Path(args.backbone))
        if args.backbone
        else PerceptualBackbone(seed=0)
    )
    report = evaluate_manifest(model, manifest, backbone, model_tag=args.tag, seed=args.seed)
    if args.json:
        print(report.to_json())
    else:
        print(report.render_table())
    return 0


def cmd_stylize(args: argparse.Namespace) -> int:
    model = load_checkpoint(Path(args.checkpoint))
    out = stylize(model, _load(args.glyph), _load(args.style))
    save_planes_png(Path(args.out), out)
    print(f"wrote {args.out}")
    return 0


def cmd_destylize(args: argparse.Namespace) -> int:
    model = load_checkpoint(Path(args.checkpoint))
    save_planes_png(Path(args.out), destylize(model, _load(args.style)))
    print(f"wrote {args.out}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import os

    import uvicorn

    from .service import ServiceConfig, create_app

    ckpt_dir = args.checkpoint_dir or os.environ.get("TEXTFX_CHECKPOINT_DIR")
    if not ckpt_dir:
        print("error: pass --checkpoint-dir or set TEXTFX_CHECKPOINT_DIR", file=sys.stderr)
        return 1
    app = create_app(ServiceConfig(Path(ckpt_dir), queue_jobs=args.queue_jobs))
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="textfx", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic styled-text dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--styles", type=int, default=4)
    p.add_argument("--glyphs", type=int, default=36)
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train a model on a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument(
        "--mode", choices=["core", "semisupervised"], default="core"
    )
    p.add_argument("--unpaired", default=None)
    p.add_argument("--iterations", type=int, default=2000)
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("finetune", help="adapt a checkpoint to one reference image")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--style", required=True, help="reference styled image (PNG)")
    p.add_argument("--glyph", default=None, help="paired glyph image for supervised mode")
    p.add_argument("--mask-fg", default=None)
    p.add_argument("--mask-bg", default=None)
    p.add_argument("--iterations", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_finetune)

    p = sub.add_parser("eval", help="score a checkpoint against a dataset")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True, help="manifest.json path or dataset root")
    p.add_argument("--backbone", default=None)
    p.add_argument("--tag", default="model")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("stylize", help="apply a style reference to a glyph image")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--glyph", required=True)
    p.add_argument("--style", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_stylize)

    p = sub.add_parser("destylize", help="recover the plain glyph from a styled image")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--style", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_destylize)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--checkpoint-dir", default=None)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--queue-jobs", action="store_true")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
