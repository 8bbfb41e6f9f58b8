import numpy as np
import pytest
import torch

from textfx.data import DatasetManifest, synth_dataset
from textfx.net import NetConfig, TextEffectModel

torch.set_num_threads(1)


def micro_config(**overrides) -> NetConfig:
    """Small widths so 16x16 forward/backward passes stay cheap."""
    base = dict(
        stem_width=6,
        content_channels=8,
        style_channels=8,
        shared_blocks=2,
        disc_width=8,
        disc_blocks=2,
    )
    base.update(overrides)
    return NetConfig(**base)


@pytest.fixture
def micro_model() -> TextEffectModel:
    torch.manual_seed(0)
    return TextEffectModel(micro_config())


@pytest.fixture
def micro_model_aug() -> TextEffectModel:
    torch.manual_seed(0)
    return TextEffectModel(micro_config(aug_discriminators=True))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(0)


@pytest.fixture(scope="session")
def dataset_16(tmp_path_factory) -> DatasetManifest:
    """Tiny 16px world shared by loader/train unit tests (read-only)."""
    root = tmp_path_factory.mktemp("ds16") / "world"
    return synth_dataset(n_styles=2, n_glyphs=6, size=16, seed=3, out=root)


@pytest.fixture(scope="session")
def dataset_32(tmp_path_factory) -> DatasetManifest:
    root = tmp_path_factory.mktemp("ds32") / "world"
    return synth_dataset(n_styles=2, n_glyphs=6, size=32, seed=4, out=root)


def random_planes(rng: np.random.Generator, size: int = 16) -> np.ndarray:
    return rng.random((3, size, size), dtype=np.float32)


@pytest.fixture(scope="session")
def toy_run(tmp_path_factory) -> dict:
    """Reference toy model: 2 styles x 30 glyphs at 64px, 2000 iterations.

    Trained once per session (about three minutes) and shared by the
    end-to-end checks. Stylization L1 is sampled at iteration 50 so decay
    can be measured against the final model.
    """
    import time

    from textfx.evaluate import destylization_psnr, stylization_l1
    from textfx.train import RunConfig, train_core

    base = tmp_path_factory.mktemp("toy")
    world = synth_dataset(n_styles=2, n_glyphs=30, size=64, seed=7, out=base / "world")
    marks: dict[int, float] = {}

    def hook(it: int, model: TextEffectModel) -> None:
        marks[it] = stylization_l1(model, world, seed=123)
        model.train()

    started = time.perf_counter()
    config = RunConfig(
        data_root=world.root,
        out_dir=base / "run",
        iterations=2000,
        batch_size=8,
        seed=11,
        checkpoint_every=500,
    )
    result = train_core(config, eval_hook=hook, eval_iters=(50,))
    wall_min = (time.perf_counter() - started) / 60.0
    result.model.train()
    return {
        "world": world,
        "result": result,
        "l1_at_50": marks[50],
        "l1_final": stylization_l1(result.model, world, seed=123),
        "psnr_final": destylization_psnr(result.model, world),
        "wall_min": wall_min,
    }
