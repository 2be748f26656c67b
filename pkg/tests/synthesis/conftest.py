"""
Synthesis Test Fixtures
"""
import numpy as np
import pytest

from difftalk.autodiff import ParamStore
from difftalk.diffusion import make_schedule
from difftalk.landmarks import rasterize_batch
from difftalk.synthesis import DualBranchModel, ToyAutoencoder, build_base, encode_all, pretrain_autoencoder, pretrain_base
from difftalk.synthesis.config import SynthesisConfig

SMALL = SynthesisConfig(base_channels=4, d_time=8, d_cond=8, ae_epochs=1, base_epochs=2, synth_epochs=2,
                        batch_size=8, seed=5)


@pytest.fixture
def small_cfg():
    return SMALL


@pytest.fixture
def sched():
    return make_schedule(5, 1e-4, 0.02)


@pytest.fixture
def untrained(small_cfg):
    """Randomly initialised dual-branch model (landmark guidance)"""
    store = ParamStore()
    ae = ToyAutoencoder(store, np.random.default_rng(0), small_cfg.latent_channels)
    base = build_base(store, small_cfg)
    store.freeze("synth.base")
    return DualBranchModel(store, ae, base, small_cfg)


@pytest.fixture(scope="module")
def pretrained(tiny_dataset):
    """
    Autoencoder and base UNet pre-trained on the shared tiny dataset

    Returns:
        dict: store, ae, base, latents, rasters, sched
    """
    store = ParamStore()
    sched = make_schedule(5, 1e-4, 0.02)
    ae, ae_report = pretrain_autoencoder(tiny_dataset.images, SMALL, store=store)
    latents = encode_all(ae, tiny_dataset.images)
    base, base_report = pretrain_base(latents, sched, SMALL, store)
    return {
        "store": store,
        "ae": ae,
        "ae_report": ae_report,
        "base": base,
        "base_report": base_report,
        "latents": latents,
        "rasters": rasterize_batch(tiny_dataset.landmarks, tiny_dataset.size),
        "sched": sched,
    }
