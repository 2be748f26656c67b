"""
Adam optimizer over a ParamStore
"""
import logging
from typing import Dict, Optional

import numpy as np

from difftalk.autodiff.params import ParamStore, under_prefix
from difftalk.exceptions import ContractViolation

logger = logging.getLogger(__name__)


class Adam:
    """
    Adam with bias correction; frozen entries are never touched

    Only trainable parameters under `prefix` (all by default) are updated.

    Usage:
        opt = Adam(store, lr=5e-4)
        store.zero_grad(); loss.backward(); opt.step()
    """

    def __init__(self, store: ParamStore, lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8, prefix: str = ""):
        self.store = store
        self.prefix = prefix
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.steps = 0
        self._m: Dict[str, np.ndarray] = {}
        self._v: Dict[str, np.ndarray] = {}

    def step(self) -> None:
        """
        Apply one update to every trainable parameter

        Raises:
            ContractViolation: If a trainable parameter has no gradient
        """
        params = [(path, t) for path, t in self.store.trainable_items() if under_prefix(path, self.prefix)]
        missing = [path for path, t in params if t.grad is None]
        if missing:
            raise ContractViolation(f"adam_step: no gradient for {len(missing)} parameter(s), e.g. {missing[0]}")

        self.steps += 1
        correction1 = 1.0 - self.beta1 ** self.steps
        correction2 = 1.0 - self.beta2 ** self.steps
        for path, tensor in params:
            grad = tensor.grad
            m = self._m.get(path)
            v = self._v.get(path)
            if m is None:
                m = np.zeros_like(grad)
                v = np.zeros_like(grad)
            m = self.beta1 * m + (1.0 - self.beta1) * grad
            v = self.beta2 * v + (1.0 - self.beta2) * grad * grad
            self._m[path], self._v[path] = m, v
            tensor.data = tensor.data - self.lr * (m / correction1) / (np.sqrt(v / correction2) + self.eps)


def adam_step(store: ParamStore, lr: float, beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8, optimizer: Optional[Adam] = None) -> Adam:
    """
    One Adam update; pass the returned optimizer back in to keep moment state

    Returns:
        The optimizer holding the moment estimates
    """
    optimizer = optimizer or Adam(store, lr=lr, beta1=beta1, beta2=beta2, eps=eps)
    optimizer.step()
    return optimizer
