"""
Tensor - dense double-precision array with a dynamic gradient tape

Every differentiable operation is a `Function` subclass. Applying a function
records it on the output tensor (`_ctx`), so `backward()` can walk the graph
in reverse topological order and push gradients to the inputs.
"""
import logging
from contextlib import contextmanager
from typing import Any, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from difftalk.exceptions import ContractViolation

logger = logging.getLogger(__name__)

DTYPE = np.float64

_grad_enabled = True

ArrayLike = Union["Tensor", np.ndarray, float, int, Sequence[float]]


@contextmanager
def no_grad() -> Iterator[None]:
    """Disable tape recording inside the block (inference, sampling)"""
    global _grad_enabled
    previous = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = previous


def is_grad_enabled() -> bool:
    return _grad_enabled


def unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """
    Sum out broadcast dimensions so that grad matches shape

    Args:
        grad: Gradient with the broadcast (output) shape
        shape: Shape of the operand that was broadcast

    Returns:
        Gradient reduced to `shape`
    """
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


class Function:
    """
    Base class for differentiable operations

    Subclasses implement `forward` on raw arrays (saving whatever the backward
    pass needs on `self`) and `backward`, which maps dL/d(output) to one
    gradient per input (None for inputs that take no gradient).
    """

    def __init__(self, *tensors: "Tensor"):
        self.tensors = tensors

    def forward(self, *arrays: np.ndarray, **kwargs: Any) -> np.ndarray:
        raise NotImplementedError(f"{self.__class__.__name__}.forward")

    def backward(self, grad: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:
        raise NotImplementedError(f"{self.__class__.__name__}.backward")

    @classmethod
    def apply(cls, *inputs: ArrayLike, **kwargs: Any) -> "Tensor":
        """
        Run the forward pass and record the operation on the tape

        Args:
            *inputs: Operands (non-tensors are wrapped as constants)
            **kwargs: Static arguments forwarded to `forward`

        Returns:
            Output tensor, attached to the tape when any input requires grad
        """
        tensors = tuple(as_tensor(t) for t in inputs)
        func = cls(*tensors)
        out = func.forward(*(t.data for t in tensors), **kwargs)
        requires_grad = _grad_enabled and any(t.requires_grad for t in tensors)
        return Tensor(out, requires_grad=requires_grad, _ctx=func if requires_grad else None)


class Tensor:
    """
    Dense row-major float64 tensor

    Attributes:
        data: Underlying numpy array
        requires_grad: Whether gradients flow into this tensor
        grad: Accumulated gradient (same shape as data) or None
    """

    def __init__(self, data: ArrayLike, requires_grad: bool = False, _ctx: Optional[Function] = None):
        if isinstance(data, Tensor):
            data = data.data
        self.data = np.asarray(data, dtype=DTYPE)
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self._ctx = _ctx
        self._retain = False

    # ============== PROPERTIES ==============

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def is_leaf(self) -> bool:
        return self._ctx is None

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractViolation(f"item() needs a single element, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def retain_grad(self) -> "Tensor":
        """Keep the gradient of this non-leaf tensor after backward"""
        self._retain = True
        return self

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.data)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag})"

    # ============== ARITHMETIC ==============

    def __add__(self, other: ArrayLike) -> "Tensor":
        return F.Add.apply(self, other)

    def __radd__(self, other: ArrayLike) -> "Tensor":
        return F.Add.apply(other, self)

    def __sub__(self, other: ArrayLike) -> "Tensor":
        return F.Sub.apply(self, other)

    def __rsub__(self, other: ArrayLike) -> "Tensor":
        return F.Sub.apply(other, self)

    def __mul__(self, other: ArrayLike) -> "Tensor":
        return F.Mul.apply(self, other)

    def __rmul__(self, other: ArrayLike) -> "Tensor":
        return F.Mul.apply(other, self)

    def __truediv__(self, other: ArrayLike) -> "Tensor":
        return F.Div.apply(self, other)

    def __rtruediv__(self, other: ArrayLike) -> "Tensor":
        return F.Div.apply(other, self)

    def __neg__(self) -> "Tensor":
        return F.Neg.apply(self)

    def __pow__(self, exponent: float) -> "Tensor":
        return F.Pow.apply(self, exponent=float(exponent))

    def __matmul__(self, other: ArrayLike) -> "Tensor":
        return F.MatMul.apply(self, other)

    def __getitem__(self, index: Any) -> "Tensor":
        return F.GetItem.apply(self, index=index)

    # ============== REDUCTIONS & SHAPE ==============

    def sum(self, axis: Any = None, keepdims: bool = False) -> "Tensor":
        return F.Sum.apply(self, axis=axis, keepdims=keepdims)

    def mean(self, axis: Any = None, keepdims: bool = False) -> "Tensor":
        count = self.data.size if axis is None else int(np.prod([self.shape[a] for a in np.atleast_1d(axis)]))
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)

    def reshape(self, *shape: int) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return F.Reshape.apply(self, shape=shape)

    def transpose(self, *axes: int) -> "Tensor":
        return F.Transpose.apply(self, axes=axes or None)

    def swap_last(self) -> "Tensor":
        axes = list(range(self.ndim))
        axes[-1], axes[-2] = axes[-2], axes[-1]
        return self.transpose(*axes)

    # ============== ELEMENT-WISE ==============

    def exp(self) -> "Tensor":
        return F.Exp.apply(self)

    def log(self) -> "Tensor":
        return F.Log.apply(self)

    def sqrt(self) -> "Tensor":
        return F.Pow.apply(self, exponent=0.5)

    def tanh(self) -> "Tensor":
        return F.Tanh.apply(self)

    def sigmoid(self) -> "Tensor":
        return F.Sigmoid.apply(self)

    def leaky_relu(self, slope: float = 0.2) -> "Tensor":
        return F.LeakyReLU.apply(self, slope=slope)

    def silu(self) -> "Tensor":
        return F.SiLU.apply(self)

    # ============== BACKPROPAGATION ==============

    def _topological_order(self) -> List["Tensor"]:
        """Nodes reachable from self, output first"""
        order: List[Tensor] = []
        visited = set()
        stack: List[Tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            if node._ctx is not None:
                for parent in node._ctx.tensors:
                    if parent.requires_grad and id(parent) not in visited:
                        stack.append((parent, False))
        order.reverse()
        return order

    def backward(self) -> None:
        """
        Accumulate d(self)/d(leaf) into every reachable leaf's `grad`

        Raises:
            ContractViolation: If self is not a scalar or is not on the tape
        """
        if self.data.size != 1:
            raise ContractViolation(f"backward() needs a scalar loss, got shape {self.shape}")
        if not self.requires_grad:
            raise ContractViolation("loss is not connected to any tensor that requires grad")

        pending = {id(self): np.ones_like(self.data)}
        for node in self._topological_order():
            grad = pending.pop(id(node), None)
            if grad is None:
                continue
            if node._ctx is None or node._retain:
                node.grad = grad.copy() if node.grad is None else node.grad + grad
            if node._ctx is None:
                continue
            input_grads = node._ctx.backward(grad)
            for parent, parent_grad in zip(node._ctx.tensors, input_grads):
                if parent_grad is None or not parent.requires_grad:
                    continue
                parent_grad = unbroadcast(np.asarray(parent_grad, dtype=DTYPE), parent.shape)
                key = id(parent)
                pending[key] = parent_grad if key not in pending else pending[key] + parent_grad


def as_tensor(value: ArrayLike) -> Tensor:
    """Wrap constants; tensors pass through unchanged"""
    return value if isinstance(value, Tensor) else Tensor(value)


def parameter(data: ArrayLike) -> Tensor:
    """Leaf tensor that takes gradients"""
    return Tensor(np.array(data, dtype=DTYPE), requires_grad=True)


from difftalk.autodiff import functions as F  # noqa: E402  (functions import Function/Tensor from here)
