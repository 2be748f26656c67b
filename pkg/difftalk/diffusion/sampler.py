"""
Deterministic DDIM sampling loop with upper-row clamping
"""
import logging
from typing import Any, Callable

import numpy as np

from difftalk.diffusion.noising import ddim_step, upper_rows
from difftalk.diffusion.schedule import NoiseSchedule

logger = logging.getLogger(__name__)

EpsModel = Callable[[np.ndarray, int, Any], np.ndarray]


def sample_loop(eps_model: EpsModel, z0_upper: np.ndarray, cond: Any, sched: NoiseSchedule, seed: int) -> np.ndarray:
    """
    Denoise from t = T down to 1, keeping the upper rows fixed

    Args:
        eps_model: Noise predictor called as eps_model(z_t, t, cond)
        z0_upper: Latent whose upper rows are known, [c, h, w] or [B, c, h, w]
        cond: Conditioning passed through to eps_model
        sched: Noise schedule
        seed: Seed of the initial lower-region noise

    Returns:
        z0 estimate; its upper rows are bit-equal to z0_upper's
    """
    z0_upper = np.asarray(z0_upper, dtype=np.float64)
    rows = upper_rows(z0_upper.shape[-2])
    z = np.random.default_rng(seed).standard_normal(z0_upper.shape)
    z[..., :rows, :] = z0_upper[..., :rows, :]
    for t in range(sched.T, 0, -1):
        eps = eps_model(z, t, cond)
        z = ddim_step(z, eps, t, sched)
        z[..., :rows, :] = z0_upper[..., :rows, :]
    logger.debug(f"Sampled latent {z.shape} over {sched.T} steps (seed={seed})")
    return z
