########################################################################
# Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
# SPDX-License-Identifier: MIT-0
########################################################################

"""Dense float64 tensors with tape-based reverse-mode differentiation.

Every operation on a :class:`Tensor` whose inputs require gradients records a
node holding references to its parents and a backward closure. Calling
:meth:`Tensor.backward` builds a :class:`ComputeGraph` from the recorded nodes
and walks it once in reverse topological order.
"""

import contextlib
import threading
from typing import Callable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from unimoco.exceptions import DimensionError


ArrayLike = Union['Tensor', np.ndarray, float, int, Sequence]
BackwardFn = Callable[[np.ndarray], None]

_grad_mode = threading.local()


def is_grad_enabled() -> bool:
    return getattr(_grad_mode, 'enabled', True)


@contextlib.contextmanager
def no_grad() -> Iterator[None]:
    """Disable graph recording for the current thread only."""
    previous = is_grad_enabled()
    _grad_mode.enabled = False
    try:
        yield
    finally:
        _grad_mode.enabled = previous


def unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` after numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:

    __slots__ = ('data', 'grad', 'requires_grad', 'op', '_parents', '_backward')

    def __init__(self, data: ArrayLike, requires_grad: bool = False, op: str = 'leaf') -> None:
        if isinstance(data, Tensor):
            data = data.data
        self.data = np.array(data, dtype=np.float64)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self.op = op
        self._parents: Tuple['Tensor', ...] = ()
        self._backward: Optional[BackwardFn] = None

    @classmethod
    def from_op(cls, data: np.ndarray, parents: Sequence['Tensor'], backward: BackwardFn,
                op: str) -> 'Tensor':
        out = cls.__new__(cls)
        out.data = np.asarray(data, dtype=np.float64)
        out.grad = None
        out.op = op
        out.requires_grad = is_grad_enabled() and any(p.requires_grad for p in parents)
        if out.requires_grad:
            out._parents = tuple(parents)
            out._backward = backward
        else:
            out._parents = ()
            out._backward = None
        return out

    ##########################################################
    # Introspection
    ##########################################################
    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> 'Tensor':
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        return f'Tensor(shape={self.shape}, op={self.op}, requires_grad={self.requires_grad})'

    def accumulate(self, grad: np.ndarray) -> None:
        if not self.requires_grad:
            return
        grad = unbroadcast(grad, self.shape)
        if self.grad is None:
            self.grad = np.array(grad, dtype=np.float64)
        else:
            self.grad = self.grad + grad

    def backward(self, grad: Optional[np.ndarray] = None) -> None:
        if grad is None:
            if self.size != 1:
                raise DimensionError(f'backward needs an explicit gradient for shape {self.shape}')
            grad = np.ones(self.shape)
        self.accumulate(np.asarray(grad, dtype=np.float64))
        for node in reversed(ComputeGraph.from_root(self).nodes):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    ##########################################################
    # Elementwise arithmetic
    ##########################################################
    def __add__(self, other: ArrayLike) -> 'Tensor':
        other = as_tensor(other)

        def backward(g: np.ndarray) -> None:
            self.accumulate(g)
            other.accumulate(g)

        return Tensor.from_op(self.data + other.data, (self, other), backward, 'add')

    __radd__ = __add__

    def __neg__(self) -> 'Tensor':
        return Tensor.from_op(-self.data, (self,), lambda g: self.accumulate(-g), 'neg')

    def __sub__(self, other: ArrayLike) -> 'Tensor':
        return self + (-as_tensor(other))

    def __rsub__(self, other: ArrayLike) -> 'Tensor':
        return as_tensor(other) + (-self)

    def __mul__(self, other: ArrayLike) -> 'Tensor':
        other = as_tensor(other)

        def backward(g: np.ndarray) -> None:
            self.accumulate(g * other.data)
            other.accumulate(g * self.data)

        return Tensor.from_op(self.data * other.data, (self, other), backward, 'mul')

    __rmul__ = __mul__

    def __truediv__(self, other: ArrayLike) -> 'Tensor':
        other = as_tensor(other)

        def backward(g: np.ndarray) -> None:
            self.accumulate(g / other.data)
            other.accumulate(-g * self.data / (other.data ** 2))

        return Tensor.from_op(self.data / other.data, (self, other), backward, 'div')

    def __matmul__(self, other: 'Tensor') -> 'Tensor':
        from unimoco.numerics.functional import matmul
        return matmul(self, other)

    def __getitem__(self, index) -> 'Tensor':
        def backward(g: np.ndarray) -> None:
            full = np.zeros(self.shape)
            np.add.at(full, index, g)
            self.accumulate(full)

        return Tensor.from_op(self.data[index], (self,), backward, 'index')

    ##########################################################
    # Unary functions and reductions
    ##########################################################
    def exp(self) -> 'Tensor':
        out = np.exp(self.data)
        return Tensor.from_op(out, (self,), lambda g: self.accumulate(g * out), 'exp')

    def log(self) -> 'Tensor':
        return Tensor.from_op(np.log(self.data), (self,), lambda g: self.accumulate(g / self.data), 'log')

    def tanh(self) -> 'Tensor':
        out = np.tanh(self.data)
        return Tensor.from_op(out, (self,), lambda g: self.accumulate(g * (1.0 - out ** 2)), 'tanh')

    def sum(self, axis: Optional[int] = None, keepdims: bool = False) -> 'Tensor':
        def backward(g: np.ndarray) -> None:
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            self.accumulate(np.broadcast_to(g, self.shape))

        return Tensor.from_op(self.data.sum(axis=axis, keepdims=keepdims), (self,), backward, 'sum')

    def mean(self, axis: Optional[int] = None, keepdims: bool = False) -> 'Tensor':
        count = self.size if axis is None else self.shape[axis]
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)

    ##########################################################
    # Shape manipulation
    ##########################################################
    def reshape(self, *shape: int) -> 'Tensor':
        return Tensor.from_op(self.data.reshape(shape), (self,),
                              lambda g: self.accumulate(g.reshape(self.shape)), 'reshape')

    def transpose(self, *axes: int) -> 'Tensor':
        axes = axes or tuple(reversed(range(self.ndim)))
        inverse = tuple(np.argsort(axes))
        return Tensor.from_op(self.data.transpose(axes), (self,),
                              lambda g: self.accumulate(g.transpose(inverse)), 'transpose')

    @property
    def T(self) -> 'Tensor':
        return self.transpose()

    def swap_last(self) -> 'Tensor':
        axes = list(range(self.ndim))
        axes[-1], axes[-2] = axes[-2], axes[-1]
        return self.transpose(*axes)


def as_tensor(value: ArrayLike) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


class ComputeGraph:
    """Recorded operations reachable from a root, in topological order."""

    def __init__(self, nodes: List[Tensor]) -> None:
        self.nodes = nodes

    def __len__(self) -> int:
        return len(self.nodes)

    @classmethod
    def from_root(cls, root: Tensor) -> 'ComputeGraph':
        order: List[Tensor] = []
        visited = set()
        stack = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in visited:
                    stack.append((parent, False))
        return cls(order)
