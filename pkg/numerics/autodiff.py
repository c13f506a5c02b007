"""Tape-based reverse-mode differentiation over float64 numpy arrays.

Only the primitives the pipeline needs are provided. Elementwise binary
operations accept operands of equal shape, a scalar, or a bias vector matching
the last axis; anything else is rejected instead of broadcast.
"""

from __future__ import annotations

from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from errors import ContractError, DimensionError
from .linalg import cholesky_solve

__all__ = (
    'Tensor',
    'Graph',
    'backward',
    'lift',
    'matmul',
    'relu',
    'exp',
    'log',
    'sqrt',
    'maximum',
    'clip',
    'elementwise',
    'softmax',
    'log_softmax',
    'group_softmax',
    'group_log_softmax',
    'concat',
    'take',
    'spd_solve',
)

VJP = Callable[[np.ndarray], tuple[np.ndarray | None, ...]]


class Tensor:
    """A value in a computation graph.

    Tensors that do not depend on any parameter are constants: operations on
    them are evaluated eagerly and never recorded.
    """

    __slots__ = ('data', 'graph', 'requires_grad', 'op', 'name', '_parents', '_vjp')

    __array_ufunc__ = None  # ndarray <op> Tensor defers to Tensor's reflected operators

    def __init__(
        self,
        data,
        *,
        graph: Graph | None = None,
        requires_grad: bool = False,
        op: str = 'const',
        name: str | None = None,
        parents: tuple[Tensor, ...] = (),
        vjp: VJP | None = None,
    ) -> None:
        self.data: np.ndarray = np.asarray(data, dtype=np.float64)
        self.graph: Graph | None = graph
        self.requires_grad: bool = requires_grad
        self.op: str = op
        self.name: str | None = name
        self._parents: tuple[Tensor, ...] = parents
        self._vjp: VJP | None = vjp

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def T(self) -> Tensor:
        return transpose(self)

    def item(self) -> float:
        return float(self.data)

    def sum(self, axis: int | None = None, *, keepdims: bool = False) -> Tensor:
        return reduce_sum(self, axis, keepdims=keepdims)

    def mean(self) -> Tensor:
        return reduce_sum(self) * (1.0 / self.data.size)

    def reshape(self, *shape: int) -> Tensor:
        return reshape(self, shape[0] if len(shape) == 1 and isinstance(shape[0], tuple) else shape)

    def transpose(self, *axes: int) -> Tensor:
        return transpose(self, axes or None)

    def __add__(self, other) -> Tensor:
        return add(self, other)

    def __radd__(self, other) -> Tensor:
        return add(other, self)

    def __sub__(self, other) -> Tensor:
        return add(self, neg(lift(other)))

    def __rsub__(self, other) -> Tensor:
        return add(other, neg(self))

    def __mul__(self, other) -> Tensor:
        return mul(self, other)

    def __rmul__(self, other) -> Tensor:
        return mul(other, self)

    def __truediv__(self, other) -> Tensor:
        return div(self, other)

    def __rtruediv__(self, other) -> Tensor:
        return div(other, self)

    def __neg__(self) -> Tensor:
        return neg(self)

    def __matmul__(self, other) -> Tensor:
        return matmul(self, other)

    def __rmatmul__(self, other) -> Tensor:
        return matmul(other, self)

    def __getitem__(self, key) -> Tensor:
        return select(self, key)

    def __repr__(self) -> str:
        kind = 'param' if self.op == 'param' else ('node' if self.requires_grad else 'const')
        label = f' name={self.name!r}' if self.name else ''
        return f'<Tensor {kind} op={self.op}{label} shape={self.shape}>'


class Graph:
    """Records the forward order of every operation depending on a parameter.

    A graph is confined to one thread. Build a fresh graph per forward pass.
    """

    __slots__ = ('tape', 'params')

    def __init__(self) -> None:
        self.tape: list[Tensor] = []
        self.params: dict[str, Tensor] = {}

    def param(self, name: str, value) -> Tensor:
        """Register a named leaf parameter holding a copy of ``value``."""
        if name in self.params:
            raise ContractError(f'parameter {name!r} registered twice')
        tensor = Tensor(np.array(value, dtype=np.float64, copy=True), graph=self, requires_grad=True, op='param', name=name)
        self.params[name] = tensor
        return tensor

    def parameters(self, values: Mapping[str, np.ndarray]) -> dict[str, Tensor]:
        return {name: self.param(name, value) for name, value in values.items()}

    def __len__(self) -> int:
        return len(self.tape)

    def __repr__(self) -> str:
        return f'<Graph nodes={len(self.tape)} params={list(self.params)}>'


def lift(value) -> Tensor:
    """Wrap ``value`` as a constant unless it already is a tensor."""
    return value if isinstance(value, Tensor) else Tensor(value)


def _node(data: np.ndarray, parents: tuple[Tensor, ...], vjp: VJP, op: str) -> Tensor:
    graph = next((parent.graph for parent in parents if parent.requires_grad), None)
    if graph is None:
        return Tensor(data, op=op)
    out = Tensor(data, graph=graph, requires_grad=True, op=op, parents=parents, vjp=vjp)
    graph.tape.append(out)
    return out


def backward(graph: Graph, loss: Tensor) -> dict[str, np.ndarray]:
    """Gradients of the scalar ``loss`` with respect to every registered parameter.

    Nodes are visited in exact reverse of their forward order. Parameters the
    loss does not depend on receive zero gradients of their own shape.

    Raises
    ------
    ContractError
        If ``loss`` is not a scalar.
    """
    if loss.data.size != 1:
        raise ContractError(f'loss must be scalar, got shape {loss.shape}')

    grads: dict[int, np.ndarray] = {}
    if loss.requires_grad:
        grads[id(loss)] = np.ones_like(loss.data)
        for node in reversed(graph.tape):
            upstream = grads.pop(id(node), None)
            if upstream is None:
                continue
            for parent, grad in zip(node._parents, node._vjp(upstream)):
                if grad is None or not parent.requires_grad:
                    continue
                key = id(parent)
                grads[key] = grads[key] + grad if key in grads else grad

    return {
        name: np.array(grads.get(id(tensor), np.zeros_like(tensor.data)), dtype=np.float64)
        for name, tensor in graph.params.items()
    }


def _check_operands(a: np.ndarray, b: np.ndarray, op: str) -> None:
    if a.shape == b.shape or a.ndim == 0 or b.ndim == 0:
        return
    if b.ndim == 1 and a.ndim >= 1 and a.shape[-1] == b.shape[0]:
        return
    if a.ndim == 1 and b.ndim >= 1 and b.shape[-1] == a.shape[0]:
        return
    raise DimensionError(f'{op}: incompatible shapes {a.shape} and {b.shape}')


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if grad.shape == shape:
        return grad
    if len(shape) == 0:
        return np.asarray(grad.sum())
    return grad.reshape(-1, shape[0]).sum(axis=0)


def add(a, b) -> Tensor:
    a, b = lift(a), lift(b)
    _check_operands(a.data, b.data, 'add')
    sa, sb = a.shape, b.shape
    return _node(
        a.data + b.data, (a, b),
        lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)),
        'add',
    )


def neg(a) -> Tensor:
    a = lift(a)
    return _node(-a.data, (a,), lambda g: (-g,), 'neg')


def mul(a, b) -> Tensor:
    a, b = lift(a), lift(b)
    _check_operands(a.data, b.data, 'mul')
    A, B = a.data, b.data
    return _node(
        A * B, (a, b),
        lambda g: (_unbroadcast(g * B, A.shape), _unbroadcast(g * A, B.shape)),
        'mul',
    )


def div(a, b) -> Tensor:
    a, b = lift(a), lift(b)
    _check_operands(a.data, b.data, 'div')
    A, B = a.data, b.data
    out = A / B
    return _node(
        out, (a, b),
        lambda g: (_unbroadcast(g / B, A.shape), _unbroadcast(-g * out / B, B.shape)),
        'div',
    )


def matmul(a, b) -> Tensor:
    """Matrix product for 2-D @ 2-D, batched 3-D @ 3-D and 3-D @ 2-D operands."""
    a, b = lift(a), lift(b)
    A, B = a.data, b.data
    valid = (
        A.ndim in (2, 3) and B.ndim in (2, 3)
        and not (A.ndim == 2 and B.ndim == 3)
        and (B.ndim == 2 or A.shape[0] == B.shape[0])
        and A.shape[-1] == B.shape[-2]
    )
    if not valid:
        raise DimensionError(f'matmul: cannot multiply {A.shape} by {B.shape}')

    def vjp(g: np.ndarray):
        grad_a = g @ np.swapaxes(B, -1, -2)
        if A.ndim == 3 and B.ndim == 2:
            grad_b = A.reshape(-1, A.shape[-1]).T @ g.reshape(-1, g.shape[-1])
        else:
            grad_b = np.swapaxes(A, -1, -2) @ g
        return grad_a, grad_b

    return _node(A @ B, (a, b), vjp, 'matmul')


def elementwise(a, fn: Callable[[np.ndarray], np.ndarray], dfn: Callable[[np.ndarray, np.ndarray], np.ndarray], op: str) -> Tensor:
    """Apply an elementwise function with derivative ``dfn(input, output)``."""
    a = lift(a)
    A = a.data
    out = fn(A)
    return _node(out, (a,), lambda g: (g * dfn(A, out),), op)


def relu(a) -> Tensor:
    return elementwise(a, lambda x: np.maximum(x, 0.0), lambda x, _: (x > 0.0).astype(np.float64), 'relu')


def exp(a) -> Tensor:
    return elementwise(a, np.exp, lambda _, y: y, 'exp')


def log(a) -> Tensor:
    return elementwise(a, np.log, lambda x, _: 1.0 / x, 'log')


def sqrt(a) -> Tensor:
    def dsqrt(_, y):
        safe = np.where(y > 0.0, y, 1.0)
        return np.where(y > 0.0, 0.5 / safe, 0.0)
    return elementwise(a, np.sqrt, dsqrt, 'sqrt')


def maximum(a, floor: float) -> Tensor:
    """``max(a, floor)`` against a constant floor; no gradient where clamped."""
    return elementwise(a, lambda x: np.maximum(x, floor), lambda x, _: (x >= floor).astype(np.float64), 'maximum')


def clip(a, low: float, high: float) -> Tensor:
    return elementwise(
        a, lambda x: np.clip(x, low, high),
        lambda x, _: ((x >= low) & (x <= high)).astype(np.float64),
        'clip',
    )


def reduce_sum(a, axis: int | None = None, *, keepdims: bool = False) -> Tensor:
    a = lift(a)
    shape = a.shape

    def vjp(g: np.ndarray):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, shape).copy(),)

    return _node(a.data.sum(axis=axis, keepdims=keepdims), (a,), vjp, 'sum')


def reshape(a, shape: Sequence[int]) -> Tensor:
    a = lift(a)
    original = a.shape
    return _node(a.data.reshape(tuple(shape)), (a,), lambda g: (g.reshape(original),), 'reshape')


def transpose(a, axes: Sequence[int] | None = None) -> Tensor:
    a = lift(a)
    if axes is None:
        axes = tuple(reversed(range(a.ndim)))
    inverse = tuple(np.argsort(axes))
    return _node(a.data.transpose(axes), (a,), lambda g: (g.transpose(inverse),), 'transpose')


def concat(tensors: Iterable, axis: int = -1) -> Tensor:
    parts = tuple(lift(t) for t in tensors)
    sizes = [part.shape[axis] for part in parts]
    splits = np.cumsum(sizes)[:-1]
    return _node(
        np.concatenate([part.data for part in parts], axis=axis), parts,
        lambda g: tuple(np.split(g, splits, axis=axis)),
        'concat',
    )


def take(a, index: np.ndarray) -> Tensor:
    """Gather rows of ``a`` (along axis 0) with an integer index array of any shape."""
    a = lift(a)
    index = np.asarray(index, dtype=np.int64)
    shape = a.shape

    def vjp(g: np.ndarray):
        grad = np.zeros(shape)
        np.add.at(grad, index, g)
        return (grad,)

    return _node(a.data[index], (a,), vjp, 'take')


def select(a, key) -> Tensor:
    a = lift(a)
    shape = a.shape

    def vjp(g: np.ndarray):
        grad = np.zeros(shape)
        np.add.at(grad, key, g)
        return (grad,)

    return _node(np.array(a.data[key]), (a,), vjp, 'select')


def _softmax(x: np.ndarray, axis: int) -> np.ndarray:
    shifted = np.exp(x - x.max(axis=axis, keepdims=True))
    return shifted / shifted.sum(axis=axis, keepdims=True)


def softmax(a, axis: int = -1) -> Tensor:
    a = lift(a)
    out = _softmax(a.data, axis)
    return _node(out, (a,), lambda g: (out * (g - (g * out).sum(axis=axis, keepdims=True)),), 'softmax')


def log_softmax(a, axis: int = -1) -> Tensor:
    a = lift(a)
    x = a.data
    peak = x.max(axis=axis, keepdims=True)
    out = x - peak - np.log(np.exp(x - peak).sum(axis=axis, keepdims=True))
    probs = np.exp(out)
    return _node(out, (a,), lambda g: (g - probs * g.sum(axis=axis, keepdims=True),), 'log_softmax')


def group_softmax(a, groups: Sequence[tuple[int, int]]) -> Tensor:
    """Softmax applied independently to each ``[start, stop)`` slice of the last axis."""
    a = lift(a)
    out = np.empty_like(a.data)
    for start, stop in groups:
        out[..., start:stop] = _softmax(a.data[..., start:stop], -1)

    def vjp(g: np.ndarray):
        grad = np.empty_like(g)
        for start, stop in groups:
            s, gs = out[..., start:stop], g[..., start:stop]
            grad[..., start:stop] = s * (gs - (gs * s).sum(axis=-1, keepdims=True))
        return (grad,)

    return _node(out, (a,), vjp, 'group_softmax')


def group_log_softmax(a, groups: Sequence[tuple[int, int]]) -> Tensor:
    a = lift(a)
    out = np.empty_like(a.data)
    for start, stop in groups:
        x = a.data[..., start:stop]
        peak = x.max(axis=-1, keepdims=True)
        out[..., start:stop] = x - peak - np.log(np.exp(x - peak).sum(axis=-1, keepdims=True))

    def vjp(g: np.ndarray):
        grad = np.empty_like(g)
        for start, stop in groups:
            gs = g[..., start:stop]
            grad[..., start:stop] = gs - np.exp(out[..., start:stop]) * gs.sum(axis=-1, keepdims=True)
        return (grad,)

    return _node(out, (a,), vjp, 'group_log_softmax')


def spd_solve(a, b) -> Tensor:
    """``a^{-1} b`` for symmetric positive definite ``a``, differentiable in both operands."""
    a, b = lift(a), lift(b)
    if a.ndim != 2 or b.ndim != 2:
        raise DimensionError(f'spd_solve expects 2-D operands, got {a.shape} and {b.shape}')
    A = a.data
    x = cholesky_solve(A, b.data)

    def vjp(g: np.ndarray):
        grad_b = cholesky_solve(A, g)
        return -grad_b @ x.T, grad_b

    return _node(x, (a, b), vjp, 'spd_solve')
