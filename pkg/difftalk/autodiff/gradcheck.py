"""
Central finite-difference gradient checks
"""
import logging
from typing import Callable, Sequence

import numpy as np

from difftalk.autodiff.tensor import Tensor

logger = logging.getLogger(__name__)


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """‖a − n‖ / max(‖a‖ + ‖n‖, tiny)"""
    scale = np.linalg.norm(analytic) + np.linalg.norm(numeric)
    if scale < 1e-300:
        return 0.0
    return float(np.linalg.norm(analytic - numeric) / scale)


def numeric_gradient(loss_fn: Callable[[], Tensor], tensor: Tensor, step: float = 1e-5) -> np.ndarray:
    """Central differences of a scalar loss w.r.t. every entry of tensor"""
    grad = np.zeros_like(tensor.data)
    data = tensor.data
    for index in np.ndindex(data.shape):
        original = data[index]
        data[index] = original + step
        upper = loss_fn().item()
        data[index] = original - step
        lower = loss_fn().item()
        data[index] = original
        grad[index] = (upper - lower) / (2.0 * step)
    return grad


def gradcheck(loss_fn: Callable[[], Tensor], tensors: Sequence[Tensor], step: float = 1e-5) -> float:
    """
    Compare analytic and numeric gradients of a scalar loss

    Args:
        loss_fn: Rebuilds the loss from the current tensor values
        tensors: Leaf tensors (requires_grad=True) to check
        step: Finite-difference step

    Returns:
        The largest relative error over all checked tensors
    """
    for tensor in tensors:
        tensor.zero_grad()
    loss_fn().backward()
    worst = 0.0
    for tensor in tensors:
        analytic = tensor.grad.copy()
        numeric = numeric_gradient(loss_fn, tensor, step)
        worst = max(worst, relative_error(analytic, numeric))
    logger.debug(f"gradcheck over {len(tensors)} tensor(s): max relative error {worst:.3e}")
    return worst
