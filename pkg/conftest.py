"""
Shared pytest fixtures and hooks

- seeded random generator
- a tiny, fast run configuration rooted in a temporary directory
- one generated synthetic sequence shared by the whole session
- failure reports annotated with the artifact directories of the failing run
"""
import logging

import numpy as np
import pytest

from difftalk.dataset import gen_sequence, load_dataset
from difftalk.utils.config_reader import build_run_config

logger = logging.getLogger(__name__)

TINY_SEED = 7
TINY_FRAMES = 24
TINY_SIZE = 16


def tiny_raw_config(root) -> dict:
    """Plain config dict for a run that finishes in seconds"""
    return {
        "seed": TINY_SEED,
        "paths": {
            "dataset": str(root / "data"),
            "checkpoints": str(root / "checkpoints"),
            "outputs": str(root / "samples"),
        },
        "data": {"n_frames": TINY_FRAMES, "test_frames": 6, "image_size": TINY_SIZE, "audio_noise": 0.01},
        "schedule": {"T": 5, "beta_start": 1e-4, "beta_end": 0.02},
        "completion": {"d_model": 16, "n_layers": 1, "epochs": 2, "batch_size": 8, "min_frames": 1},
        "synthesis": {
            "base_channels": 4,
            "d_time": 8,
            "d_cond": 8,
            "ae_epochs": 1,
            "base_epochs": 1,
            "synth_epochs": 1,
            "batch_size": 8,
        },
        "sample": {"n_frames": 3, "overlays": True},
        "logging": {"level": "INFO"},
    }


@pytest.fixture
def rng():
    """Fresh seeded generator per test"""
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_config(tmp_path):
    """Validated RunConfig whose artifact paths live under tmp_path"""
    return build_run_config(tiny_raw_config(tmp_path))


@pytest.fixture(scope="session")
def tiny_dataset_dir(tmp_path_factory):
    """
    One generated 24-frame, 16x16 sequence

    Returns:
        str: Dataset directory (treat as read-only)
    """
    root = tmp_path_factory.mktemp("tiny_data")
    logger.info(f"Generating shared tiny dataset in {root}")
    return gen_sequence(str(root), TINY_FRAMES, seed=TINY_SEED, size=TINY_SIZE)


@pytest.fixture(scope="session")
def tiny_dataset(tiny_dataset_dir):
    return load_dataset(tiny_dataset_dir)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    """Attach the artifact paths of a failing pipeline test to its report"""
    outcome = yield
    report = outcome.get_result()
    if report.when != "call" or not report.failed:
        return
    cfg = getattr(item, "funcargs", {}).get("tiny_config")
    if cfg is not None:
        report.sections.append((
            "difftalk run",
            f"seed={cfg.seed}\ndataset={cfg.paths.dataset}\n"
            f"checkpoints={cfg.paths.checkpoints}\noutputs={cfg.paths.outputs}",
        ))

