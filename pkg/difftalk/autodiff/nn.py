"""
Layer library - foundation for every network in the pipeline

Features:
- Parameters registered in a shared ParamStore under dotted prefixes
- Seeded initialisation (one numpy Generator per model)
- Linear / convolution / normalisation / attention building blocks
"""
import logging
import math
from typing import Optional, Sequence

import numpy as np

from difftalk.autodiff import functional as fn
from difftalk.autodiff.params import ParamStore
from difftalk.autodiff.tensor import Tensor
from difftalk.exceptions import ShapeError

logger = logging.getLogger(__name__)


class Module:
    """
    Base class for all layers and networks

    Provides parameter registration and prefix handling; subclasses build
    their children in `__init__` and implement `forward`.
    """

    def __init__(self, store: ParamStore, prefix: str, rng: np.random.Generator):
        """
        Initialize base module

        Args:
            store: Parameter registry shared by the whole model
            prefix: Dotted path under which this module's parameters live
            rng: Generator used for weight initialisation
        """
        self.store = store
        self.prefix = prefix
        self.rng = rng

    def path(self, name: str) -> str:
        return f"{self.prefix}.{name}" if self.prefix else name

    def param(self, name: str, shape: Sequence[int], init: str = "normal",
              std: Optional[float] = None) -> Tensor:
        """
        Register a parameter

        Args:
            name: Name relative to this module's prefix
            shape: Parameter shape
            init: 'normal', 'zeros' or 'ones'
            std: Standard deviation for 'normal' (default 1/sqrt(fan_in))

        Returns:
            The registered leaf tensor
        """
        shape = tuple(shape)
        if init == "zeros":
            value = np.zeros(shape)
        elif init == "ones":
            value = np.ones(shape)
        else:
            if std is None:
                fan_in = int(np.prod(shape[1:])) if len(shape) > 1 else shape[0]
                std = 1.0 / math.sqrt(max(fan_in, 1))
            value = self.rng.standard_normal(shape) * std
        return self.store.add(self.path(name), value)

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    def forward(self, *args, **kwargs):
        raise NotImplementedError(f"{self.__class__.__name__}.forward")


class Linear(Module):
    """y = x W + b over the last axis"""

    def __init__(self, store: ParamStore, prefix: str, rng: np.random.Generator,
                 d_in: int, d_out: int, bias: bool = True, zero_init: bool = False):
        super().__init__(store, prefix, rng)
        self.d_in, self.d_out = d_in, d_out
        self.weight = self.param("weight", (d_in, d_out), init="zeros" if zero_init else "normal",
                                 std=1.0 / math.sqrt(d_in))
        self.bias = self.param("bias", (d_out,), init="zeros") if bias else None

    def forward(self, x: Tensor) -> Tensor:
        if x.shape[-1] != self.d_in:
            raise ShapeError(f"{self.prefix}: expected last dim {self.d_in}, got shape {x.shape}")
        out = fn.matmul(x, self.weight)
        return out + self.bias if self.bias is not None else out


class Conv1d(Module):
    def __init__(self, store: ParamStore, prefix: str, rng: np.random.Generator,
                 c_in: int, c_out: int, kernel: int = 3, stride: int = 1, padding: int = 1):
        super().__init__(store, prefix, rng)
        self.stride, self.padding = stride, padding
        self.weight = self.param("weight", (c_out, c_in, kernel))
        self.bias = self.param("bias", (c_out,), init="zeros")

    def forward(self, x: Tensor) -> Tensor:
        return fn.conv1d(x, self.weight, self.bias, stride=self.stride, padding=self.padding)


class Conv2d(Module):
    def __init__(self, store: ParamStore, prefix: str, rng: np.random.Generator,
                 c_in: int, c_out: int, kernel: int = 3, stride: int = 1,
                 padding: Optional[int] = None, zero_init: bool = False):
        super().__init__(store, prefix, rng)
        self.stride = stride
        self.padding = kernel // 2 if padding is None else padding
        self.weight = self.param("weight", (c_out, c_in, kernel, kernel),
                                 init="zeros" if zero_init else "normal")
        self.bias = self.param("bias", (c_out,), init="zeros")

    def forward(self, x: Tensor) -> Tensor:
        return fn.conv2d(x, self.weight, self.bias, stride=self.stride, padding=self.padding)


class LayerNorm(Module):
    def __init__(self, store: ParamStore, prefix: str, rng: np.random.Generator, dim: int):
        super().__init__(store, prefix, rng)
        self.gain = self.param("gain", (dim,), init="ones")
        self.bias = self.param("bias", (dim,), init="zeros")

    def forward(self, x: Tensor) -> Tensor:
        return fn.layer_norm(x, self.gain, self.bias)


class MLP(Module):
    """Two-layer perceptron with a configurable activation"""

    def __init__(self, store: ParamStore, prefix: str, rng: np.random.Generator,
                 d_in: int, d_hidden: int, d_out: int, activation: str = "leaky_relu",
                 zero_init_out: bool = False):
        super().__init__(store, prefix, rng)
        self.activation = activation
        self.fc1 = Linear(store, self.path("fc1"), rng, d_in, d_hidden)
        self.fc2 = Linear(store, self.path("fc2"), rng, d_hidden, d_out, zero_init=zero_init_out)

    def forward(self, x: Tensor) -> Tensor:
        hidden = self.fc1(x)
        hidden = hidden.silu() if self.activation == "silu" else hidden.leaky_relu()
        return self.fc2(hidden)


class MultiHeadAttention(Module):
    """
    Multi-head attention between a query sequence and a memory sequence

    Inputs are [B, L, d]. Value and output projections can be bias-free so
    that an all-zero memory yields an exactly zero output.
    """

    def __init__(self, store: ParamStore, prefix: str, rng: np.random.Generator,
                 d_query: int, d_memory: int, d_model: int, n_heads: int = 1,
                 value_bias: bool = True, out_bias: bool = True, zero_init_out: bool = False):
        super().__init__(store, prefix, rng)
        if d_model % n_heads:
            raise ShapeError(f"{prefix}: d_model {d_model} not divisible by {n_heads} heads")
        self.n_heads = n_heads
        self.d_head = d_model // n_heads
        self.q_proj = Linear(store, self.path("q"), rng, d_query, d_model)
        self.k_proj = Linear(store, self.path("k"), rng, d_memory, d_model)
        self.v_proj = Linear(store, self.path("v"), rng, d_memory, d_model, bias=value_bias)
        self.out_proj = Linear(store, self.path("out"), rng, d_model, d_query, bias=out_bias,
                               zero_init=zero_init_out)

    def _split(self, x: Tensor) -> Tensor:
        batch, length, _ = x.shape
        return x.reshape(batch, length, self.n_heads, self.d_head).transpose(0, 2, 1, 3)

    def forward(self, x: Tensor, memory: Tensor) -> Tensor:
        q = self._split(self.q_proj(x))
        k = self._split(self.k_proj(memory))
        v = self._split(self.v_proj(memory))
        attended = fn.attention(q, k, v)
        batch, _, length, _ = attended.shape
        merged = attended.transpose(0, 2, 1, 3).reshape(batch, length, self.n_heads * self.d_head)
        return self.out_proj(merged)


class SelfAttentionBlock(Module):
    """Pre-norm transformer encoder layer"""

    def __init__(self, store: ParamStore, prefix: str, rng: np.random.Generator,
                 d_model: int, n_heads: int = 1, ff_mult: int = 2):
        super().__init__(store, prefix, rng)
        self.norm1 = LayerNorm(store, self.path("norm1"), rng, d_model)
        self.attn = MultiHeadAttention(store, self.path("attn"), rng, d_model, d_model, d_model, n_heads)
        self.norm2 = LayerNorm(store, self.path("norm2"), rng, d_model)
        self.ff = MLP(store, self.path("ff"), rng, d_model, ff_mult * d_model, d_model)

    def forward(self, x: Tensor) -> Tensor:
        h = self.norm1(x)
        x = x + self.attn(h, h)
        return x + self.ff(self.norm2(x))


class CrossAttentionBlock(Module):
    """Pre-norm decoder layer: queries attend to a memory sequence, then a feed-forward"""

    def __init__(self, store: ParamStore, prefix: str, rng: np.random.Generator,
                 d_model: int, d_memory: int, n_heads: int = 1, ff_mult: int = 2):
        super().__init__(store, prefix, rng)
        self.norm_q = LayerNorm(store, self.path("norm_q"), rng, d_model)
        self.norm_m = LayerNorm(store, self.path("norm_m"), rng, d_memory)
        self.attn = MultiHeadAttention(store, self.path("attn"), rng, d_model, d_memory, d_model, n_heads)
        self.norm2 = LayerNorm(store, self.path("norm2"), rng, d_model)
        self.ff = MLP(store, self.path("ff"), rng, d_model, ff_mult * d_model, d_model)

    def forward(self, x: Tensor, memory: Tensor) -> Tensor:
        x = x + self.attn(self.norm_q(x), self.norm_m(memory))
        return x + self.ff(self.norm2(x))
