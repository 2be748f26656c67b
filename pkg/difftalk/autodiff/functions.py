"""
Differentiable operations recorded on the tape

Each class computes its forward result from raw arrays and returns one
gradient per input from `backward`. Broadcasting is handled centrally by
`Tensor.backward`, which un-broadcasts every returned gradient.
"""
from typing import Any, Optional, Sequence, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from difftalk.autodiff.tensor import Function
from difftalk.exceptions import ShapeError

Grads = Tuple[Optional[np.ndarray], ...]


def _is_basic_index(index: Any) -> bool:
    """Slices, ints and Ellipsis only: no element is selected twice"""
    items = index if isinstance(index, tuple) else (index,)
    return all(isinstance(i, (int, np.integer, slice)) or i is Ellipsis or i is None for i in items)


# ============== ARITHMETIC ==============

class Add(Function):
    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return a + b

    def backward(self, grad: np.ndarray) -> Grads:
        return grad, grad


class Sub(Function):
    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return a - b

    def backward(self, grad: np.ndarray) -> Grads:
        return grad, -grad


class Mul(Function):
    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        self.a, self.b = a, b
        return a * b

    def backward(self, grad: np.ndarray) -> Grads:
        return grad * self.b, grad * self.a


class Div(Function):
    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        self.a, self.b = a, b
        return a / b

    def backward(self, grad: np.ndarray) -> Grads:
        return grad / self.b, -grad * self.a / (self.b * self.b)


class Neg(Function):
    def forward(self, a: np.ndarray) -> np.ndarray:
        return -a

    def backward(self, grad: np.ndarray) -> Grads:
        return (-grad,)


class Pow(Function):
    def forward(self, a: np.ndarray, exponent: float) -> np.ndarray:
        self.a, self.exponent = a, exponent
        return a ** exponent

    def backward(self, grad: np.ndarray) -> Grads:
        return (grad * self.exponent * self.a ** (self.exponent - 1.0),)


class MatMul(Function):
    """Batched matrix product over the last two axes"""

    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
            raise ShapeError(f"matmul dimension mismatch: {a.shape} x {b.shape}")
        self.a, self.b = a, b
        return np.matmul(a, b)

    def backward(self, grad: np.ndarray) -> Grads:
        grad_a = np.matmul(grad, np.swapaxes(self.b, -1, -2))
        grad_b = np.matmul(np.swapaxes(self.a, -1, -2), grad)
        return grad_a, grad_b


# ============== REDUCTIONS & SHAPE ==============

class Sum(Function):
    def forward(self, a: np.ndarray, axis: Any = None, keepdims: bool = False) -> np.ndarray:
        self.shape = a.shape
        self.axis = axis
        self.keepdims = keepdims
        return np.asarray(a.sum(axis=axis, keepdims=keepdims))

    def backward(self, grad: np.ndarray) -> Grads:
        if self.axis is not None and not self.keepdims:
            axes = tuple(ax % len(self.shape) for ax in np.atleast_1d(self.axis))
            grad = np.expand_dims(grad, axes)
        return (np.broadcast_to(grad, self.shape),)


class Reshape(Function):
    def forward(self, a: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
        self.shape = a.shape
        return a.reshape(shape)

    def backward(self, grad: np.ndarray) -> Grads:
        return (grad.reshape(self.shape),)


class Transpose(Function):
    def forward(self, a: np.ndarray, axes: Optional[Sequence[int]] = None) -> np.ndarray:
        self.axes = tuple(axes) if axes else tuple(reversed(range(a.ndim)))
        return np.transpose(a, self.axes)

    def backward(self, grad: np.ndarray) -> Grads:
        return (np.transpose(grad, np.argsort(self.axes)),)


class GetItem(Function):
    def forward(self, a: np.ndarray, index: Any) -> np.ndarray:
        self.shape = a.shape
        self.index = index
        return a[index]

    def backward(self, grad: np.ndarray) -> Grads:
        out = np.zeros(self.shape)
        if _is_basic_index(self.index):
            out[self.index] = grad
        else:
            np.add.at(out, self.index, grad)
        return (out,)


class Concat(Function):
    def forward(self, *arrays: np.ndarray, axis: int = 0) -> np.ndarray:
        self.axis = axis
        self.sizes = [a.shape[axis] for a in arrays]
        return np.concatenate(arrays, axis=axis)

    def backward(self, grad: np.ndarray) -> Grads:
        cuts = np.cumsum(self.sizes)[:-1]
        return tuple(np.split(grad, cuts, axis=self.axis))


# ============== ELEMENT-WISE ==============

class Exp(Function):
    def forward(self, a: np.ndarray) -> np.ndarray:
        self.out = np.exp(a)
        return self.out

    def backward(self, grad: np.ndarray) -> Grads:
        return (grad * self.out,)


class Log(Function):
    def forward(self, a: np.ndarray) -> np.ndarray:
        self.a = a
        return np.log(a)

    def backward(self, grad: np.ndarray) -> Grads:
        return (grad / self.a,)


class Tanh(Function):
    def forward(self, a: np.ndarray) -> np.ndarray:
        self.out = np.tanh(a)
        return self.out

    def backward(self, grad: np.ndarray) -> Grads:
        return (grad * (1.0 - self.out * self.out),)


class Sigmoid(Function):
    def forward(self, a: np.ndarray) -> np.ndarray:
        self.out = 0.5 * (1.0 + np.tanh(0.5 * a))
        return self.out

    def backward(self, grad: np.ndarray) -> Grads:
        return (grad * self.out * (1.0 - self.out),)


class LeakyReLU(Function):
    def forward(self, a: np.ndarray, slope: float = 0.2) -> np.ndarray:
        self.positive = a > 0
        self.slope = slope
        return np.where(self.positive, a, slope * a)

    def backward(self, grad: np.ndarray) -> Grads:
        return (np.where(self.positive, grad, self.slope * grad),)


class SiLU(Function):
    def forward(self, a: np.ndarray) -> np.ndarray:
        self.a = a
        self.sig = 0.5 * (1.0 + np.tanh(0.5 * a))
        return a * self.sig

    def backward(self, grad: np.ndarray) -> Grads:
        return (grad * (self.sig + self.a * self.sig * (1.0 - self.sig)),)


class Softmax(Function):
    """Max-shifted softmax along one axis"""

    def forward(self, a: np.ndarray, axis: int = -1) -> np.ndarray:
        self.axis = axis
        shifted = np.exp(a - a.max(axis=axis, keepdims=True))
        self.out = shifted / shifted.sum(axis=axis, keepdims=True)
        return self.out

    def backward(self, grad: np.ndarray) -> Grads:
        inner = (grad * self.out).sum(axis=self.axis, keepdims=True)
        return (self.out * (grad - inner),)


# ============== CONVOLUTION & RESAMPLING ==============

class Conv1d(Function):
    """x[B,C,L] * w[O,C,k] with zero padding and stride"""

    def forward(self, x: np.ndarray, w: np.ndarray, stride: int = 1, padding: int = 0) -> np.ndarray:
        if x.ndim != 3 or w.ndim != 3 or x.shape[1] != w.shape[1]:
            raise ShapeError(f"conv1d dimension mismatch: input {x.shape}, weight {w.shape}")
        self.x_shape, self.w = x.shape, w
        self.stride, self.padding = stride, padding
        xp = np.pad(x, ((0, 0), (0, 0), (padding, padding)))
        self.padded_shape = xp.shape
        k = w.shape[2]
        self.windows = sliding_window_view(xp, k, axis=2)[:, :, ::stride]  # B,C,Lo,k
        return np.tensordot(self.windows, w, axes=([1, 3], [1, 2])).transpose(0, 2, 1)

    def backward(self, grad: np.ndarray) -> Grads:
        s, k = self.stride, self.w.shape[2]
        length_out = grad.shape[2]
        grad_w = np.tensordot(grad, self.windows, axes=([0, 2], [0, 2]))
        grad_xp = np.zeros(self.padded_shape)
        for i in range(k):
            grad_xp[:, :, i:i + s * length_out:s] += np.einsum("bol,oc->bcl", grad, self.w[:, :, i])
        p = self.padding
        grad_x = grad_xp[:, :, p:p + self.x_shape[2]]
        return grad_x, grad_w


class Conv2d(Function):
    """x[B,C,H,W] * w[O,C,kh,kw] with zero padding and stride"""

    def forward(self, x: np.ndarray, w: np.ndarray, stride: int = 1, padding: int = 0) -> np.ndarray:
        if x.ndim != 4 or w.ndim != 4 or x.shape[1] != w.shape[1]:
            raise ShapeError(f"conv2d dimension mismatch: input {x.shape}, weight {w.shape}")
        self.x_shape, self.w = x.shape, w
        self.stride, self.padding = stride, padding
        pad = ((0, 0), (0, 0), (padding, padding), (padding, padding))
        xp = np.pad(x, pad)
        self.padded_shape = xp.shape
        kh, kw = w.shape[2:]
        self.windows = sliding_window_view(xp, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride]
        return np.tensordot(self.windows, w, axes=([1, 4, 5], [1, 2, 3])).transpose(0, 3, 1, 2)

    def backward(self, grad: np.ndarray) -> Grads:
        s = self.stride
        kh, kw = self.w.shape[2:]
        h_out, w_out = grad.shape[2:]
        grad_w = np.tensordot(grad, self.windows, axes=([0, 2, 3], [0, 2, 3]))
        grad_xp = np.zeros(self.padded_shape)
        for i in range(kh):
            for j in range(kw):
                grad_xp[:, :, i:i + s * h_out:s, j:j + s * w_out:s] += np.einsum(
                    "bohw,oc->bchw", grad, self.w[:, :, i, j]
                )
        p = self.padding
        grad_x = grad_xp[:, :, p:p + self.x_shape[2], p:p + self.x_shape[3]]
        return grad_x, grad_w


class Upsample2d(Function):
    """Nearest-neighbour upsampling of the two trailing axes"""

    def forward(self, x: np.ndarray, factor: int = 2) -> np.ndarray:
        self.factor = factor
        return x.repeat(factor, axis=-2).repeat(factor, axis=-1)

    def backward(self, grad: np.ndarray) -> Grads:
        f = self.factor
        *lead, h, w = grad.shape
        return (grad.reshape(*lead, h // f, f, w // f, f).sum(axis=(-3, -1)),)
