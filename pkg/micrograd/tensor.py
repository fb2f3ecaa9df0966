"""Tensor with reverse-mode autodiff over a closure-based graph."""

from enum import Enum
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from core.errors import NonFiniteError

BackwardFn = Callable[[np.ndarray], None]


class Precision(Enum):
    """Float width of a graph; 64-bit exists for oracles and gradient checks."""

    FLOAT32 = "float32"
    FLOAT64 = "float64"

    @property
    def dtype(self) -> np.dtype:
        return np.dtype(self.value)

    def __str__(self):
        return self.value


class Tensor:
    """An n-d array of floats that remembers how it was computed.

    Leaves are created directly; op outputs are created with ``Tensor.from_op``
    which wires the parent links and the backward closure. ``backward`` walks the
    graph in reverse topological order and accumulates ``grad`` on every node
    that requires it.
    """

    __slots__ = ("data", "grad", "requires_grad", "op", "_parents", "_backward")

    def __init__(
        self,
        data,
        requires_grad: bool = False,
        dtype: Optional[np.dtype] = None,
        op: str = "leaf",
    ):
        array = np.asarray(data, dtype=dtype if dtype is not None else None)
        if array.dtype.kind != "f":
            array = array.astype(np.float64)
        self.data: np.ndarray = array
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self.op = op
        self._parents: Tuple["Tensor", ...] = ()
        self._backward: Optional[BackwardFn] = None
        _check_finite(self.data, op)

    @classmethod
    def from_op(
        cls,
        data: np.ndarray,
        parents: Sequence["Tensor"],
        backward: BackwardFn,
        op: str,
    ) -> "Tensor":
        """Create the output of an op; the output requires grad if any parent does."""
        out = cls(data, op=op)
        out.requires_grad = any(p.requires_grad for p in parents)
        if out.requires_grad:
            out._parents = tuple(parents)
            out._backward = backward
        return out

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(self.data.shape)

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    def numpy(self) -> np.ndarray:
        return self.data

    def zero_grad(self) -> None:
        self.grad = None

    def accumulate(self, grad: np.ndarray) -> None:
        """Add ``grad`` into this node's gradient buffer."""
        if not self.requires_grad:
            return
        if grad.shape != self.data.shape:
            grad = grad.reshape(self.data.shape)
        if self.grad is None:
            self.grad = np.array(grad, dtype=self.data.dtype, copy=True)
        else:
            self.grad += grad

    def backward(self, grad: Optional[np.ndarray] = None) -> None:
        """Back-propagate ``grad`` (ones for a single-element tensor) to all leaves."""
        if grad is None:
            if self.size != 1:
                raise ValueError(
                    f"backward() without a seed gradient needs a single-element "
                    f"tensor, got shape {self.shape}"
                )
            grad = np.ones_like(self.data)
        grad = np.asarray(grad, dtype=self.data.dtype)
        _check_finite(grad, f"seed gradient of {self.op}")

        order = _topological_order(self)
        self.accumulate(grad)
        for node in reversed(order):
            if node._backward is None or node.grad is None:
                continue
            node._backward(node.grad)
            for parent in node._parents:
                if parent.grad is not None:
                    _check_finite(parent.grad, f"gradient of {parent.op}")

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, dtype={self.dtype}, op={self.op})"


def _topological_order(root: Tensor) -> List[Tensor]:
    order: List[Tensor] = []
    seen = set()
    stack: List[Tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in seen:
                stack.append((parent, False))
    return order


def _check_finite(array: np.ndarray, where: str) -> None:
    if not np.isfinite(array).all():
        raise NonFiniteError(where)


def zero_grads(tensors: Iterable[Tensor]) -> None:
    for tensor in tensors:
        tensor.zero_grad()
