"""Minimal reverse-mode automatic differentiation over dense float64 arrays.

Every operation builds a node in an acyclic graph; :func:`backward` walks
the graph once in reverse topological order and accumulates gradients into
the ``requires_grad`` leaves.  All math is double precision and
deterministic.  Graphs are built per training example and garbage-collected
afterwards.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .errors import ContractError, DimensionError, DomainError

Array = np.ndarray
# A backward closure receives the output gradient and a deposit function
# that adds a contribution to one of the node's parents.  Deposits flagged
# ``owned=True`` promise the array is freshly allocated and unaliased, so
# the accumulator may adopt it instead of copying.
Deposit = Callable[["Tensor", Array, bool], None]


class Tensor:
    """A dense float64 array participating in a differentiable graph.

    ``data`` holds the values; ``grad`` is populated on leaves by
    :func:`backward`.  Interior tensors carry a closure that propagates the
    output gradient to their parents.
    """

    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad: Array | None = None
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[Array, Deposit], None] | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def backward(self) -> dict["Tensor", Array]:
        return backward(self)

    # Light operator sugar; the module-level functions are the real API.
    def __add__(self, other: "Tensor") -> "Tensor":
        return add(self, other)

    def __sub__(self, other: "Tensor") -> "Tensor":
        return sub(self, other)

    def __mul__(self, other: "Tensor") -> "Tensor":
        return mul(self, other)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        return matmul(self, other)

    def __neg__(self) -> "Tensor":
        return neg(self)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"


def constant(data) -> Tensor:
    return Tensor(data, requires_grad=False)


def parameter(data) -> Tensor:
    return Tensor(data, requires_grad=True)


def _node(data: Array, parents: Sequence[Tensor], backward_fn) -> Tensor:
    out = Tensor(data)
    tracked = tuple(parents)
    # Constant-only subgraphs need no backward bookkeeping.
    if any(p.requires_grad or p._parents for p in tracked):
        out._parents = tracked
        out._backward = backward_fn
    return out


# ---------------------------------------------------------------------------
# linear algebra


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product; supports (m,k)@(k,n) and the matrix-vector case."""
    if a.data.ndim != 2 or b.data.ndim not in (1, 2):
        raise DimensionError(
            f"matmul expects a matrix left operand and matrix/vector right "
            f"operand, got shapes {a.shape} and {b.shape}"
        )
    if a.shape[1] != b.shape[0]:
        raise DimensionError(
            f"matmul: inner dimensions disagree for shapes {a.shape} and {b.shape}"
        )

    def backward_fn(g: Array, deposit: Deposit) -> None:
        if b.data.ndim == 1:
            deposit(a, np.outer(g, b.data), True)
            deposit(b, a.data.T @ g, True)
        else:
            deposit(a, g @ b.data.T, True)
            deposit(b, a.data.T @ g, True)

    return _node(a.data @ b.data, (a, b), backward_fn)


def transpose(a: Tensor) -> Tensor:
    if a.data.ndim != 2:
        raise DimensionError(f"transpose expects a matrix, got shape {a.shape}")

    def backward_fn(g: Array, deposit: Deposit) -> None:
        deposit(a, g.T, False)

    return _node(a.data.T, (a,), backward_fn)


def dot(a: Tensor, b: Tensor) -> Tensor:
    """Inner product of two equal-length vectors, yielding a scalar."""
    if a.data.ndim != 1 or b.data.ndim != 1 or a.shape != b.shape:
        raise DimensionError(f"dot: incompatible shapes {a.shape} and {b.shape}")

    def backward_fn(g: Array, deposit: Deposit) -> None:
        deposit(a, g * b.data, True)
        deposit(b, g * a.data, True)

    return _node(a.data @ b.data, (a, b), backward_fn)


# ---------------------------------------------------------------------------
# structural ops


def concat(parts: Sequence[Tensor]) -> Tensor:
    """Concatenate 1-D tensors end to end."""
    parts = list(parts)
    if not parts:
        raise DomainError("concat of an empty sequence")
    for p in parts:
        if p.data.ndim != 1:
            raise DimensionError(f"concat expects vectors, got shape {p.shape}")
    offsets = np.cumsum([0] + [p.size for p in parts])

    def backward_fn(g: Array, deposit: Deposit) -> None:
        for p, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
            deposit(p, g[lo:hi], False)

    return _node(np.concatenate([p.data for p in parts]), parts, backward_fn)


def slice1d(a: Tensor, start: int, stop: int) -> Tensor:
    if a.data.ndim != 1:
        raise DimensionError(f"slice1d expects a vector, got shape {a.shape}")
    if not (0 <= start <= stop <= a.size):
        raise IndexError(f"slice [{start}:{stop}] out of range for length {a.size}")

    def backward_fn(g: Array, deposit: Deposit) -> None:
        full = np.zeros_like(a.data)
        full[start:stop] = g
        deposit(a, full, True)

    return _node(a.data[start:stop].copy(), (a,), backward_fn)


def pick(a: Tensor, index: int) -> Tensor:
    """Select one entry of a vector as a scalar."""
    if a.data.ndim != 1:
        raise DimensionError(f"pick expects a vector, got shape {a.shape}")
    if not (0 <= index < a.size):
        raise IndexError(f"index {index} out of range for length {a.size}")

    def backward_fn(g: Array, deposit: Deposit) -> None:
        full = np.zeros_like(a.data)
        full[index] = g
        deposit(a, full, True)

    return _node(a.data[index], (a,), backward_fn)


def row(a: Tensor, index: int) -> Tensor:
    """Select one row of a matrix (used for trainable embedding lookups)."""
    if a.data.ndim != 2:
        raise DimensionError(f"row expects a matrix, got shape {a.shape}")
    if not (0 <= index < a.shape[0]):
        raise IndexError(f"row {index} out of range for {a.shape[0]} rows")

    def backward_fn(g: Array, deposit: Deposit) -> None:
        full = np.zeros_like(a.data)
        full[index] = g
        deposit(a, full, True)

    return _node(a.data[index].copy(), (a,), backward_fn)


def stack(parts: Sequence[Tensor]) -> Tensor:
    """Stack equal-length vectors into the rows of a matrix."""
    parts = list(parts)
    if not parts:
        raise DomainError("stack of an empty sequence")
    length = parts[0].size
    for p in parts:
        if p.data.ndim != 1 or p.size != length:
            raise DimensionError("stack expects equal-length vectors")

    def backward_fn(g: Array, deposit: Deposit) -> None:
        for i, p in enumerate(parts):
            deposit(p, g[i], False)

    return _node(np.stack([p.data for p in parts]), parts, backward_fn)


# ---------------------------------------------------------------------------
# arithmetic


def add(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise DimensionError(f"add: shape mismatch {a.shape} vs {b.shape}")

    def backward_fn(g: Array, deposit: Deposit) -> None:
        deposit(a, g, False)
        deposit(b, g, False)

    return _node(a.data + b.data, (a, b), backward_fn)


def add_n(parts: Sequence[Tensor]) -> Tensor:
    """Sum of equally shaped tensors (n-ary ``add``)."""
    parts = list(parts)
    if not parts:
        raise DomainError("add_n of an empty sequence")
    shape = parts[0].shape
    for p in parts:
        if p.shape != shape:
            raise DimensionError(f"add_n: shape mismatch {p.shape} vs {shape}")
    total = parts[0].data.copy()
    for p in parts[1:]:
        total += p.data

    def backward_fn(g: Array, deposit: Deposit) -> None:
        for p in parts:
            deposit(p, g, False)

    return _node(total, parts, backward_fn)


def add_scalar(a: Tensor, s: Tensor) -> Tensor:
    """Broadcast-add a scalar tensor to every entry of ``a``."""
    if s.data.ndim != 0:
        raise DimensionError(f"add_scalar expects a scalar, got shape {s.shape}")

    def backward_fn(g: Array, deposit: Deposit) -> None:
        deposit(a, g, False)
        deposit(s, np.asarray(g.sum()), True)

    return _node(a.data + s.data, (a, s), backward_fn)


def sub(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise DimensionError(f"sub: shape mismatch {a.shape} vs {b.shape}")

    def backward_fn(g: Array, deposit: Deposit) -> None:
        deposit(a, g, False)
        deposit(b, -g, True)

    return _node(a.data - b.data, (a, b), backward_fn)


def neg(a: Tensor) -> Tensor:
    def backward_fn(g: Array, deposit: Deposit) -> None:
        deposit(a, -g, True)

    return _node(-a.data, (a,), backward_fn)


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise product of equally shaped tensors."""
    if a.shape != b.shape:
        raise DimensionError(f"mul: shape mismatch {a.shape} vs {b.shape}")

    def backward_fn(g: Array, deposit: Deposit) -> None:
        deposit(a, g * b.data, True)
        deposit(b, g * a.data, True)

    return _node(a.data * b.data, (a, b), backward_fn)


def scale(a: Tensor, c: float) -> Tensor:
    """Multiply by a python constant (not differentiated w.r.t. ``c``)."""
    c = float(c)

    def backward_fn(g: Array, deposit: Deposit) -> None:
        deposit(a, g * c, True)

    return _node(a.data * c, (a,), backward_fn)


def sum_(a: Tensor) -> Tensor:
    def backward_fn(g: Array, deposit: Deposit) -> None:
        deposit(a, np.full_like(a.data, float(g)), True)

    return _node(np.asarray(a.data.sum()), (a,), backward_fn)


# ---------------------------------------------------------------------------
# pointwise nonlinearities


def sigmoid(a: Tensor) -> Tensor:
    out_data = _sigmoid(a.data)

    def backward_fn(g: Array, deposit: Deposit) -> None:
        deposit(a, g * out_data * (1.0 - out_data), True)

    return _node(out_data, (a,), backward_fn)


def tanh(a: Tensor) -> Tensor:
    out_data = np.tanh(a.data)

    def backward_fn(g: Array, deposit: Deposit) -> None:
        deposit(a, g * (1.0 - out_data * out_data), True)

    return _node(out_data, (a,), backward_fn)


def relu(a: Tensor) -> Tensor:
    def backward_fn(g: Array, deposit: Deposit) -> None:
        deposit(a, g * (a.data > 0.0), True)

    return _node(np.maximum(a.data, 0.0), (a,), backward_fn)


def log(a: Tensor) -> Tensor:
    if np.any(a.data <= 0.0):
        raise DomainError("log of a non-positive value")

    def backward_fn(g: Array, deposit: Deposit) -> None:
        deposit(a, g / a.data, True)

    return _node(np.log(a.data), (a,), backward_fn)


def square(a: Tensor) -> Tensor:
    def backward_fn(g: Array, deposit: Deposit) -> None:
        deposit(a, g * 2.0 * a.data, True)

    return _node(a.data * a.data, (a,), backward_fn)


def softplus(a: Tensor) -> Tensor:
    """log(1 + exp(x)) computed without overflow; derivative is sigmoid."""
    out_data = np.log1p(np.exp(-np.abs(a.data))) + np.maximum(a.data, 0.0)

    def backward_fn(g: Array, deposit: Deposit) -> None:
        deposit(a, g * _sigmoid(a.data), True)

    return _node(out_data, (a,), backward_fn)


_POINTWISE = {
    "sigmoid": sigmoid,
    "tanh": tanh,
    "relu": relu,
    "log": log,
    "square": square,
    "softplus": softplus,
}


def pointwise(kind: str, a: Tensor) -> Tensor:
    """Apply a named elementwise nonlinearity."""
    try:
        fn = _POINTWISE[kind]
    except KeyError:
        raise DomainError(f"unknown pointwise kind {kind!r}") from None
    return fn(a)


# ---------------------------------------------------------------------------
# softmax family


def softmax(a: Tensor) -> Tensor:
    """Probability vector via max-subtracted exponentials."""
    if a.data.ndim != 1 or a.size == 0:
        raise DomainError(f"softmax expects a nonempty vector, got shape {a.shape}")
    shifted = a.data - a.data.max()
    e = np.exp(shifted)
    out_data = e / e.sum()

    def backward_fn(g: Array, deposit: Deposit) -> None:
        deposit(a, out_data * (g - float(g @ out_data)), True)

    return _node(out_data, (a,), backward_fn)


def log_softmax(a: Tensor) -> Tensor:
    if a.data.ndim != 1 or a.size == 0:
        raise DomainError(f"log_softmax expects a nonempty vector, got shape {a.shape}")
    shifted = a.data - a.data.max()
    out_data = shifted - np.log(np.exp(shifted).sum())

    def backward_fn(g: Array, deposit: Deposit) -> None:
        deposit(a, g - np.exp(out_data) * g.sum(), True)

    return _node(out_data, (a,), backward_fn)


# ---------------------------------------------------------------------------
# backward pass


def backward(loss: Tensor) -> dict[Tensor, Array]:
    """Run reverse-mode differentiation from a scalar loss.

    Returns a map from every ``requires_grad`` leaf reachable from ``loss``
    to its gradient, and stores the same array in each leaf's ``grad``
    field.  Leaves that do not lie on any path to the loss do not appear;
    their gradient is zero.
    """
    if loss.data.ndim != 0:
        raise ContractError(f"backward requires a scalar loss, got shape {loss.shape}")

    order = _topological_order(loss)
    grads: dict[int, Array] = {}

    def deposit(t: Tensor, g: Array, owned: bool) -> None:
        acc = grads.get(id(t))
        if acc is None:
            if owned:
                grads[id(t)] = g
            else:
                acc = np.zeros_like(t.data)
                acc += g
                grads[id(t)] = acc
        else:
            acc += g

    grads[id(loss)] = np.ones((), dtype=np.float64)
    for node in order:
        g = grads.get(id(node))
        if g is None or node._backward is None:
            continue
        node._backward(g, deposit)

    leaf_grads: dict[Tensor, Array] = {}
    for node in order:
        if node.requires_grad and not node._parents:
            g = grads.get(id(node))
            if g is None:
                continue
            node.grad = g
            leaf_grads[node] = g
    return leaf_grads


def _topological_order(root: Tensor) -> list[Tensor]:
    """Consumers-before-producers order, computed iteratively."""
    post: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            post.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in seen:
                stack.append((parent, False))
    post.reverse()
    return post


def _sigmoid(x: Array) -> Array:
    z = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + z), z / (1.0 + z))
