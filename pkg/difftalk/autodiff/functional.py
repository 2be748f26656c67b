"""
Functional API over the tape: products, attention, convolutions, norms
"""
import math
from typing import Optional, Sequence

from difftalk.autodiff import functions as F
from difftalk.autodiff.tensor import ArrayLike, Tensor, as_tensor
from difftalk.exceptions import ShapeError


def matmul(a: ArrayLike, b: ArrayLike) -> Tensor:
    """Matrix product over the trailing two axes (leading axes broadcast)"""
    return F.MatMul.apply(a, b)


def softmax(x: ArrayLike, axis: int = -1) -> Tensor:
    x = as_tensor(x)
    if not -x.ndim <= axis < x.ndim:
        raise ShapeError(f"softmax axis {axis} invalid for shape {x.shape}")
    return F.Softmax.apply(x, axis=axis)


def attention(q: ArrayLike, k: ArrayLike, v: ArrayLike) -> Tensor:
    """
    Scaled dot-product attention: softmax(q kᵀ / √d) v

    Self-attention passes the same tensor three times; cross-attention
    passes queries from one sequence and keys/values from another.

    Args:
        q: Queries [..., Lq, d]
        k: Keys [..., Lk, d]
        v: Values [..., Lk, dv]

    Returns:
        Attended values [..., Lq, dv]
    """
    q, k, v = as_tensor(q), as_tensor(k), as_tensor(v)
    if q.shape[-1] != k.shape[-1]:
        raise ShapeError(f"attention query/key width mismatch: {q.shape} vs {k.shape}")
    if k.shape[-2] != v.shape[-2]:
        raise ShapeError(f"attention key/value length mismatch: {k.shape} vs {v.shape}")
    scores = matmul(q, k.swap_last()) * (1.0 / math.sqrt(q.shape[-1]))
    return matmul(softmax(scores, axis=-1), v)


def concat(tensors: Sequence[ArrayLike], axis: int = 0) -> Tensor:
    return F.Concat.apply(*tensors, axis=axis)


def conv1d(x: ArrayLike, weight: ArrayLike, bias: Optional[ArrayLike] = None,
           stride: int = 1, padding: int = 0) -> Tensor:
    out = F.Conv1d.apply(x, weight, stride=stride, padding=padding)
    if bias is not None:
        out = out + as_tensor(bias).reshape(1, -1, 1)
    return out


def conv2d(x: ArrayLike, weight: ArrayLike, bias: Optional[ArrayLike] = None,
           stride: int = 1, padding: int = 0) -> Tensor:
    out = F.Conv2d.apply(x, weight, stride=stride, padding=padding)
    if bias is not None:
        out = out + as_tensor(bias).reshape(1, -1, 1, 1)
    return out


def upsample(x: ArrayLike, factor: int = 2) -> Tensor:
    return F.Upsample2d.apply(x, factor=factor)


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalise the last axis, then scale and shift"""
    centered = x - x.mean(axis=-1, keepdims=True)
    variance = (centered * centered).mean(axis=-1, keepdims=True)
    return centered * ((variance + eps) ** -0.5) * gain + bias


def mse(pred: ArrayLike, target: ArrayLike) -> Tensor:
    diff = as_tensor(pred) - as_tensor(target)
    return (diff * diff).mean()
