"""Reverse-mode tape: every primitive against central finite differences."""

from __future__ import annotations

import numpy as np
import pytest

from behaviorbench.errors import UnsupportedOperationError
from behaviorbench.policy import tape
from behaviorbench.policy.tape import Node, backward, constant


def _fd(value_fn, arrays, which, h=1e-6):
    """Central-difference gradient of value_fn w.r.t. arrays[which]."""
    x = arrays[which]
    grad = np.zeros_like(x, dtype=np.float64)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        plus = [a.copy() for a in arrays]
        minus = [a.copy() for a in arrays]
        plus[which][idx] += h
        minus[which][idx] -= h
        grad[idx] = (value_fn(*plus) - value_fn(*minus)) / (2.0 * h)
    return grad


def _check(build, *arrays):
    """backward() matches finite differences for every input array."""
    leaves = [constant(a) for a in arrays]
    root = build(*leaves)
    backward(root)

    def value(*xs):
        return float(build(*[constant(x) for x in xs]).value)

    for which, leaf in enumerate(leaves):
        expected = _fd(value, [np.asarray(a, dtype=np.float64) for a in arrays], which)
        got = leaf.grad if leaf.grad is not None else np.zeros_like(expected)
        np.testing.assert_allclose(got, expected, rtol=1e-6, atol=1e-7)


def _scalarize(node):
    # weigh the output with fixed pseudo-random coefficients so every
    # component's gradient is exercised, then reduce to a scalar root
    w = np.sin(np.arange(node.value.size, dtype=np.float64) + 1.0)
    return tape.sum_(tape.mul(tape.reshape(node, (node.value.size,)), w))


RNG = np.random.default_rng(99)


def test_add_with_broadcasting():
    a = RNG.normal(size=(3, 4))
    b = RNG.normal(size=(4,))
    _check(lambda x, y: _scalarize(tape.add(x, y)), a, b)


def test_mul_with_broadcasting():
    a = RNG.normal(size=(3, 4))
    b = RNG.normal(size=(3, 1))
    _check(lambda x, y: _scalarize(tape.mul(x, y)), a, b)


def test_matmul_both_sides():
    a = RNG.normal(size=(3, 4))
    b = RNG.normal(size=(4, 2))
    _check(lambda x, y: _scalarize(tape.matmul(x, y)), a, b)


def test_tanh():
    _check(lambda x: _scalarize(tape.tanh(x)), RNG.normal(size=(6,)))


def test_exp():
    _check(lambda x: _scalarize(tape.exp(x)), RNG.normal(size=(6,)))


def test_log():
    _check(lambda x: _scalarize(tape.log(x)), RNG.uniform(0.5, 3.0, size=(6,)))


def test_relu_away_from_kink():
    x = RNG.normal(size=(8,))
    x[np.abs(x) < 0.05] = 0.5
    _check(lambda n: _scalarize(tape.relu(n)), x)


def test_relu_zero_input_has_zero_gradient():
    n = constant(np.array([0.0, -1.0, 2.0]))
    backward(tape.sum_(tape.relu(n)))
    np.testing.assert_array_equal(n.grad, [0.0, 0.0, 1.0])


def test_clip_interior_and_saturated():
    x = np.array([-2.0, -0.5, 0.3, 0.9, 2.5])
    n = constant(x)
    backward(tape.sum_(tape.clip(n, -1.0, 1.0)))
    np.testing.assert_array_equal(n.grad, [0.0, 1.0, 1.0, 1.0, 0.0])


def test_clip_boundary_passes_gradient_through():
    n = constant(np.array([-1.0, 1.0]))
    backward(tape.sum_(tape.clip(n, -1.0, 1.0)))
    np.testing.assert_array_equal(n.grad, [1.0, 1.0])


def test_minimum_routes_gradient_to_smaller():
    a = np.array([1.0, 5.0, 2.0])
    b = np.array([3.0, 4.0, 6.0])
    _check(lambda x, y: tape.sum_(tape.minimum(x, y)), a, b)


def test_minimum_tie_prefers_first_argument():
    a = constant(np.array([2.0, 2.0]))
    b = constant(np.array([2.0, 3.0]))
    backward(tape.sum_(tape.minimum(a, b)))
    np.testing.assert_array_equal(a.grad, [1.0, 1.0])
    np.testing.assert_array_equal(b.grad, [0.0, 0.0])


def test_absolute_away_from_zero():
    x = np.array([-2.0, -0.4, 0.7, 3.0])
    _check(lambda n: tape.sum_(tape.absolute(n)), x)


def test_absolute_subgradient_at_zero_is_zero():
    n = constant(np.array([0.0]))
    backward(tape.sum_(tape.absolute(n)))
    np.testing.assert_array_equal(n.grad, [0.0])


def test_huber_quadratic_and_linear_regions():
    delta = 0.5
    x = np.array([-2.0, -0.2, 0.1, 0.3, 1.5])
    _check(lambda n: tape.sum_(tape.huber(n, delta)), x)


def test_huber_matches_closed_form_values():
    delta = 1.0
    x = np.array([0.5, 2.0])
    out = tape.huber(constant(x), delta).value
    np.testing.assert_allclose(out, [0.125, 1.5])


def test_log_softmax_gradient():
    x = RNG.normal(size=(3, 5))
    _check(lambda n: _scalarize(tape.log_softmax(n)), x)


def test_log_softmax_shift_invariance():
    x = RNG.normal(size=(2, 5))
    a = tape.log_softmax(constant(x)).value
    b = tape.log_softmax(constant(x + 1000.0)).value
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_softmax_rows_sum_to_one_and_gradient():
    x = RNG.normal(size=(2, 4))
    probs = tape.softmax(constant(x)).value
    np.testing.assert_allclose(probs.sum(axis=-1), [1.0, 1.0], atol=1e-14)
    _check(lambda n: _scalarize(tape.softmax(n)), x)


def test_segment_slices_and_scatters():
    x = RNG.normal(size=(7,))
    _check(lambda n: tape.sum_(tape.segment(n, 2, 5)), x)
    n = constant(x)
    backward(tape.sum_(tape.segment(n, 2, 5)))
    np.testing.assert_array_equal(n.grad, [0, 0, 1, 1, 1, 0, 0])


def test_segment_requires_1d():
    with pytest.raises(UnsupportedOperationError):
        tape.segment(constant(np.zeros((2, 2))), 0, 1)


def test_reshape_round_trip_gradient():
    x = RNG.normal(size=(6,))
    _check(lambda n: _scalarize(tape.reshape(n, (2, 3))), x)


def test_take_per_row():
    x = RNG.normal(size=(4, 3))
    idx = [2, 0, 1, 2]
    _check(lambda n: _scalarize(tape.take_per_row(n, idx)), x)


def test_take_per_row_repeated_rows_accumulate():
    n = constant(np.zeros((1, 3)))
    picked = tape.take_per_row(n, [1])
    backward(tape.sum_(tape.mul(picked, 2.0)))
    np.testing.assert_array_equal(n.grad, [[0.0, 2.0, 0.0]])


def test_sum_and_mean_with_axes():
    x = RNG.normal(size=(3, 4))
    _check(lambda n: tape.sum_(n), x)
    _check(lambda n: _scalarize(tape.sum_(n, axis=0)), x)
    _check(lambda n: tape.mean(n), x)
    _check(lambda n: _scalarize(tape.mean(n, axis=1)), x)


def test_weighted_sum():
    xs = [RNG.normal(size=()) for _ in range(3)]
    _check(
        lambda a, b, c: tape.weighted_sum([a, b, c], [0.2, 0.3, 0.5]),
        *[np.asarray(x) for x in xs],
    )


def test_weighted_sum_length_mismatch():
    with pytest.raises(UnsupportedOperationError):
        tape.weighted_sum([constant(1.0)], [0.5, 0.5])


def test_operator_sugar_matches_fd():
    a = RNG.normal(size=(4,))
    b = RNG.normal(size=(4,))
    _check(lambda x, y: tape.sum_((x - y) * 2.0 + (-x) + x / 4.0), a, b)
    _check(lambda x, y: tape.sum_(x**2), a, b)


def test_division_by_node_is_rejected():
    a, b = constant(np.ones(2)), constant(np.ones(2))
    with pytest.raises(UnsupportedOperationError):
        a / b
    with pytest.raises(UnsupportedOperationError):
        2.0 / a


def test_only_squares_are_supported():
    with pytest.raises(UnsupportedOperationError):
        constant(np.ones(2)) ** 3


def test_backward_requires_scalar_root():
    with pytest.raises(UnsupportedOperationError):
        backward(constant(np.ones(3)))


def test_diamond_graph_accumulates_both_paths():
    x = np.array(1.5)
    n = constant(x)
    root = tape.add(tape.mul(n, n), n)  # x^2 + x, x used twice
    backward(root)
    assert n.grad == pytest.approx(2.0 * 1.5 + 1.0)


def test_shared_subexpression_gradient():
    x = RNG.normal(size=(3,))

    def build(n):
        shared = tape.tanh(n)
        return tape.sum_(tape.add(tape.mul(shared, shared), tape.exp(shared)))

    _check(build, x)


def test_deep_chain_does_not_overflow_recursion():
    n = constant(np.array(0.5))
    node = n
    for _ in range(5000):
        node = tape.add(node, 1e-6)
    backward(node)
    assert n.grad == pytest.approx(1.0)


def test_grads_are_float64():
    n = constant(np.ones((2, 2), dtype=np.float32))
    assert n.value.dtype == np.float64
    backward(tape.sum_(n))
    assert n.grad.dtype == np.float64
