"""
Diffusion algebra on latent grids [..., c, h, w]

- forward_noise: z_t = √ᾱ_t·z0 + √(1−ᾱ_t)·ε
- partial_forward_noise: upper rows keep z0, lower rows are noised
- masked_noise_loss: squared-error mean over the lower rows only
- ddim_step: deterministic single-step denoising (ᾱ form)

The upper region is the first h//2 rows (0-based row < h/2). A step t is a
Python int or, for batched training, an integer array with one step per
leading batch element.
"""
from typing import Optional, Tuple, Union

import numpy as np

from difftalk.autodiff.tensor import Tensor, as_tensor
from difftalk.diffusion.schedule import NoiseSchedule
from difftalk.exceptions import ShapeError, ValidationError

Step = Union[int, np.ndarray]


def upper_rows(h: int) -> int:
    """Number of rows in the upper (preserved) region"""
    if h < 2:
        raise ValidationError(f"latent grid needs at least 2 rows, got {h}")
    return h // 2


def upper_mask(shape) -> np.ndarray:
    """Boolean array of `shape`, True on upper-region rows"""
    mask = np.zeros(shape, dtype=bool)
    mask[..., :upper_rows(shape[-2]), :] = True
    return mask


def _coefficient(values: np.ndarray, ndim: int) -> np.ndarray:
    """Broadcast per-step scalars over the trailing (c, h, w) axes"""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 0:
        return values
    return values.reshape(values.shape + (1,) * (ndim - values.ndim))


def _check_pair(z0: np.ndarray, eps: np.ndarray, what: str) -> None:
    if np.shape(z0) != np.shape(eps):
        raise ShapeError(f"{what}: noise shape {np.shape(eps)} does not match latent shape {np.shape(z0)}")


def forward_noise(z0: np.ndarray, t: Step, eps: np.ndarray, sched: NoiseSchedule) -> np.ndarray:
    """
    Noise z0 to step t

    Raises:
        ShapeError: eps shape differs from z0
        ValidationError: t outside 1..T
    """
    _check_pair(z0, eps, "forward_noise")
    steps = sched.check_t(t)
    alpha_bar = _coefficient(sched.alpha_bar_at(steps), np.ndim(z0))
    return np.sqrt(alpha_bar) * z0 + np.sqrt(1.0 - alpha_bar) * eps


def partial_forward_noise(z0: np.ndarray, t: Step, eps: np.ndarray, sched: NoiseSchedule) -> np.ndarray:
    """forward_noise on the lower rows; upper rows copied from z0 bit-for-bit"""
    z0 = np.asarray(z0, dtype=np.float64)
    out = forward_noise(z0, t, eps, sched)
    rows = upper_rows(z0.shape[-2])
    out[..., :rows, :] = z0[..., :rows, :]
    return out


def masked_noise_loss(eps_true: np.ndarray, eps_pred: Union[Tensor, np.ndarray],
                      grid_shape: Optional[Tuple[int, int]] = None) -> Tensor:
    """
    Mean of (ε − ε′)² over the lower-region elements

    Args:
        eps_true: Drawn noise
        eps_pred: Predicted noise
        grid_shape: Expected (h, w) of the latent grid; taken from the inputs when omitted

    Raises:
        ShapeError: Shapes differ, or the grid is not grid_shape
    """
    eps_pred = as_tensor(eps_pred)
    if eps_pred.shape != np.shape(eps_true):
        raise ShapeError(f"masked_noise_loss: {eps_pred.shape} vs {np.shape(eps_true)}")
    if grid_shape is not None and tuple(eps_pred.shape[-2:]) != tuple(grid_shape):
        raise ShapeError(f"masked_noise_loss: grid {eps_pred.shape[-2:]} is not {tuple(grid_shape)}")
    rows = upper_rows(eps_pred.shape[-2])
    diff = eps_pred[..., rows:, :] - np.asarray(eps_true)[..., rows:, :]
    return (diff * diff).mean()


def noise_loss(eps_true: np.ndarray, eps_pred: Union[Tensor, np.ndarray]) -> Tensor:
    """Unmasked mean squared noise error (base pre-training)"""
    eps_pred = as_tensor(eps_pred)
    if eps_pred.shape != np.shape(eps_true):
        raise ShapeError(f"noise_loss: {eps_pred.shape} vs {np.shape(eps_true)}")
    diff = eps_pred - eps_true
    return (diff * diff).mean()


def predict_z0(z_t: np.ndarray, eps_pred: np.ndarray, t: Step, sched: NoiseSchedule) -> np.ndarray:
    """(z_t − √(1−ᾱ_t)·ε′) / √ᾱ_t"""
    steps = sched.check_t(t)
    alpha_bar = _coefficient(sched.alpha_bar_at(steps), np.ndim(z_t))
    return (z_t - np.sqrt(1.0 - alpha_bar) * eps_pred) / np.sqrt(alpha_bar)


def ddim_step(z_t: np.ndarray, eps_pred: np.ndarray, t: Step, sched: NoiseSchedule) -> np.ndarray:
    """
    z_{t−1} = √ᾱ_{t−1}·ẑ0 + √(1−ᾱ_{t−1})·ε′ with ẑ0 = predict_z0(z_t, ε′, t)

    Raises:
        ShapeError: eps_pred shape differs from z_t
        ValidationError: t outside 1..T
    """
    _check_pair(z_t, eps_pred, "ddim_step")
    steps = sched.check_t(t)
    prev = _coefficient(sched.alpha_bar_at(steps - 1), np.ndim(z_t))
    z0_hat = predict_z0(z_t, eps_pred, steps, sched)
    return np.sqrt(prev) * z0_hat + np.sqrt(1.0 - prev) * eps_pred
