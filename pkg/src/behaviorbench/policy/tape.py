"""Minimal reverse-mode automatic differentiation over float64 arrays.

The primitive set is deliberately closed: affine maps, tanh/relu, exp/log,
log-softmax, clipping with pass-through subgradients, elementwise minimum,
absolute value and Huber, slicing, gathering, and (weighted) sums. Anything
else raises UnsupportedOperationError rather than silently producing a
wrong gradient.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from behaviorbench.errors import UnsupportedOperationError

Vjp = Callable[[np.ndarray], np.ndarray]


class Node:
    """One value in the computation graph.

    Arithmetic with plain numbers and arrays is supported through operator
    overloads; operator combinations outside the primitive set raise
    UnsupportedOperationError.
    """

    __slots__ = ("value", "parents", "grad")

    def __init__(
        self, value, parents: tuple[tuple["Node", Vjp], ...] = ()
    ) -> None:
        self.value = np.asarray(value, dtype=np.float64)
        self.parents = parents
        self.grad: np.ndarray | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __neg__(self):
        return mul(self, -1.0)

    def __sub__(self, other):
        return add(self, -_as_node(other))

    def __rsub__(self, other):
        return add(_as_node(other), -self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Node):
            raise UnsupportedOperationError(
                "division by a graph value is outside the primitive set"
            )
        return mul(self, 1.0 / np.asarray(other, dtype=np.float64))

    def __rtruediv__(self, other):
        raise UnsupportedOperationError(
            "division by a graph value is outside the primitive set"
        )

    def __matmul__(self, other):
        return matmul(self, _as_node(other))

    def __rmatmul__(self, other):
        return matmul(_as_node(other), self)

    def __pow__(self, exponent):
        if exponent == 2:
            return mul(self, self)
        raise UnsupportedOperationError(
            f"power {exponent!r} is outside the primitive set (only squaring)"
        )

    def __repr__(self) -> str:
        return f"Node(shape={self.value.shape}, leaf={not self.parents})"


def constant(value) -> Node:
    """Leaf node; gradients may still be requested for it."""
    return Node(value)


def _as_node(value) -> Node:
    return value if isinstance(value, Node) else Node(value)


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    grad = np.asarray(grad, dtype=np.float64)
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


def add(a, b) -> Node:
    a, b = _as_node(a), _as_node(b)
    return Node(
        a.value + b.value,
        (
            (a, lambda g: _unbroadcast(g, a.value.shape)),
            (b, lambda g: _unbroadcast(g, b.value.shape)),
        ),
    )


def mul(a, b) -> Node:
    a, b = _as_node(a), _as_node(b)
    return Node(
        a.value * b.value,
        (
            (a, lambda g: _unbroadcast(g * b.value, a.value.shape)),
            (b, lambda g: _unbroadcast(g * a.value, b.value.shape)),
        ),
    )


def matmul(a: Node, b: Node) -> Node:
    return Node(
        a.value @ b.value,
        (
            (a, lambda g: np.asarray(g) @ b.value.T),
            (b, lambda g: a.value.T @ np.asarray(g)),
        ),
    )


def tanh(a: Node) -> Node:
    out = np.tanh(a.value)
    return Node(out, ((a, lambda g: g * (1.0 - out * out)),))


def relu(a: Node) -> Node:
    mask = a.value > 0.0
    return Node(np.where(mask, a.value, 0.0), ((a, lambda g: g * mask),))


def exp(a: Node) -> Node:
    out = np.exp(a.value)
    return Node(out, ((a, lambda g: g * out),))


def log(a: Node) -> Node:
    return Node(np.log(a.value), ((a, lambda g: g / a.value),))


def clip(a: Node, low: float, high: float) -> Node:
    """Clip with pass-through subgradient on the closed interval."""
    inside = (a.value >= low) & (a.value <= high)
    return Node(np.clip(a.value, low, high), ((a, lambda g: g * inside),))


def minimum(a: Node, b: Node) -> Node:
    """Elementwise minimum; ties route the gradient to the first argument."""
    take_a = a.value <= b.value
    return Node(
        np.where(take_a, a.value, b.value),
        (
            (a, lambda g: _unbroadcast(g * take_a, a.value.shape)),
            (b, lambda g: _unbroadcast(g * ~take_a, b.value.shape)),
        ),
    )


def absolute(a: Node) -> Node:
    """|a| with subgradient 0 at the origin."""
    return Node(np.abs(a.value), ((a, lambda g: g * np.sign(a.value)),))


def huber(a: Node, delta: float) -> Node:
    """Quadratic near zero, linear beyond delta; C1 everywhere."""
    small = np.abs(a.value) <= delta
    value = np.where(
        small, 0.5 * a.value * a.value, delta * (np.abs(a.value) - 0.5 * delta)
    )
    slope = np.where(small, a.value, delta * np.sign(a.value))
    return Node(value, ((a, lambda g: g * slope),))


def log_softmax(a: Node, axis: int = -1) -> Node:
    shifted = a.value - a.value.max(axis=axis, keepdims=True)
    logz = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    out = shifted - logz
    probs = np.exp(out)

    def vjp(g):
        g = np.asarray(g)
        return g - probs * g.sum(axis=axis, keepdims=True)

    return Node(out, ((a, vjp),))


def softmax(a: Node, axis: int = -1) -> Node:
    return exp(log_softmax(a, axis=axis))


def segment(a: Node, start: int, stop: int) -> Node:
    """Contiguous slice of a 1-D node."""
    if a.value.ndim != 1:
        raise UnsupportedOperationError("segment() expects a 1-D node")

    def vjp(g):
        out = np.zeros_like(a.value)
        out[start:stop] = g
        return out

    return Node(a.value[start:stop], ((a, vjp),))


def reshape(a: Node, shape: tuple[int, ...]) -> Node:
    old = a.value.shape
    return Node(
        a.value.reshape(shape), ((a, lambda g: np.asarray(g).reshape(old)),)
    )


def take_per_row(a: Node, indices: Sequence[int] | np.ndarray) -> Node:
    """Pick one column per row of a 2-D node."""
    idx = np.asarray(indices, dtype=np.int64)
    rows = np.arange(a.value.shape[0])

    def vjp(g):
        out = np.zeros_like(a.value)
        np.add.at(out, (rows, idx), g)
        return out

    return Node(a.value[rows, idx], ((a, vjp),))


def sum_(a: Node, axis: int | None = None) -> Node:
    if axis is None:
        return Node(
            a.value.sum(), ((a, lambda g: np.broadcast_to(g, a.value.shape).copy()),)
        )

    def vjp(g):
        return np.broadcast_to(
            np.expand_dims(np.asarray(g), axis), a.value.shape
        ).copy()

    return Node(a.value.sum(axis=axis), ((a, vjp),))


def mean(a: Node, axis: int | None = None) -> Node:
    if axis is None:
        return sum_(a) * (1.0 / a.value.size)
    return sum_(a, axis=axis) * (1.0 / a.value.shape[axis])


def weighted_sum(nodes: Sequence[Node], weights: Sequence[float]) -> Node:
    """Fixed-weight linear combination of scalar nodes."""
    if len(nodes) != len(weights):
        raise UnsupportedOperationError("weighted_sum needs one weight per node")
    total = mul(nodes[0], float(weights[0]))
    for node, w in zip(nodes[1:], weights[1:]):
        total = add(total, mul(node, float(w)))
    return total


def backward(root: Node) -> None:
    """Accumulate d(root)/d(leaf) into .grad of every node reachable from root."""
    if root.value.shape != ():
        raise UnsupportedOperationError("backward() expects a scalar root")

    order: list[Node] = []
    seen: set[int] = set()
    stack: list[tuple[Node, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent, _ in node.parents:
            stack.append((parent, False))

    grads: dict[int, np.ndarray] = {id(root): np.ones(())}
    for node in reversed(order):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        node.grad = np.asarray(g, dtype=np.float64)
        for parent, vjp in node.parents:
            contrib = vjp(g)
            if id(parent) in grads:
                grads[id(parent)] = grads[id(parent)] + contrib
            else:
                grads[id(parent)] = contrib
