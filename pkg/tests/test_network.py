"""Policy network: layout, init, numpy/tape parity, sampling, gradients."""

from __future__ import annotations

import numpy as np
import pytest

from behaviorbench.errors import ContractViolationError
from behaviorbench.policy import tape
from behaviorbench.policy.network import (
    ACTION_COUNT,
    OBS_DIM,
    PolicySpec,
    TapedPolicy,
    forward,
    forward_batch,
    grad_scalar,
    init_params,
    sample,
)


def _obs_batch(n, seed=0):
    return np.random.default_rng(seed).uniform(-1.0, 1.0, size=(n, OBS_DIM))


def test_default_parameter_count():
    spec = PolicySpec()
    assert spec.param_count == 6214
    assert init_params(spec, seed=0).shape == (6214,)


def test_param_count_formula_on_other_shapes():
    spec = PolicySpec(obs_dim=4, hidden=(3,), actions=2)
    # 4*3+3 trunk, 3*2+2 policy head, 3*1+1 value head
    assert spec.param_count == 15 + 8 + 4


def test_init_is_seeded_and_distinct_across_seeds():
    np.testing.assert_array_equal(init_params(seed=7), init_params(seed=7))
    assert not np.array_equal(init_params(seed=7), init_params(seed=8))


def test_init_biases_are_zero():
    spec = PolicySpec(obs_dim=4, hidden=(3,), actions=2)
    params = init_params(spec, seed=0)
    # trailing entries of each layer chunk are the biases
    assert np.all(params[12:15] == 0.0)  # trunk
    assert np.all(params[21:23] == 0.0)  # policy head
    assert params[26] == 0.0  # value head
    assert np.count_nonzero(params == 0.0) == 6


def test_initial_policy_is_near_uniform():
    params = init_params(seed=3)
    probs = forward(params, _obs_batch(1)[0]).action_probs
    np.testing.assert_allclose(probs, 0.2, atol=0.01)


def test_forward_accepts_matrix_or_flat_observation():
    params = init_params(seed=0)
    obs = _obs_batch(1)[0]
    a = forward(params, obs)
    b = forward(params, obs.reshape(5, 5))
    np.testing.assert_array_equal(a.action_probs, b.action_probs)
    assert a.value == b.value


def test_forward_output_is_a_distribution():
    params = init_params(seed=1)
    out = forward(params, _obs_batch(1, seed=5)[0])
    assert out.action_probs.shape == (ACTION_COUNT,)
    assert np.all(out.action_probs > 0.0)
    assert out.action_probs.sum() == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(np.log(out.action_probs), out.log_probs, atol=1e-12)


def test_forward_batch_matches_single_forward():
    params = init_params(seed=2)
    batch = _obs_batch(6, seed=9)
    probs, log_probs, values = forward_batch(params, batch)
    for i in range(6):
        single = forward(params, batch[i])
        # batched and single-row matmuls may differ in the last bit
        np.testing.assert_allclose(probs[i], single.action_probs, atol=1e-14)
        np.testing.assert_allclose(log_probs[i], single.log_probs, atol=1e-13)
        assert values[i] == pytest.approx(single.value, abs=1e-13)


def test_taped_policy_is_bit_identical_to_numpy_path():
    params = init_params(seed=4)
    batch = _obs_batch(8, seed=11)
    policy = TapedPolicy(params)
    probs, log_probs, values = forward_batch(params, batch)
    np.testing.assert_array_equal(policy.probs(batch).value, probs)
    np.testing.assert_array_equal(policy.log_probs(batch).value, log_probs)
    np.testing.assert_array_equal(policy.values(batch).value, values)


def test_bad_shapes_are_rejected():
    params = init_params(seed=0)
    with pytest.raises(ContractViolationError):
        forward(params, np.zeros(24))
    with pytest.raises(ContractViolationError):
        forward(params[:-1], np.zeros(25))
    with pytest.raises(ContractViolationError):
        forward(params, np.full(25, np.nan))


def test_grad_scalar_matches_finite_differences():
    spec = PolicySpec(obs_dim=6, hidden=(8,), actions=3)
    params = init_params(spec, seed=5)
    obs = np.random.default_rng(1).uniform(-1, 1, size=(4, 6))

    def scalar(policy):
        return tape.mean(tape.take_per_row(policy.log_probs(obs), [0, 1, 2, 0]))

    grad = grad_scalar(params, scalar, spec)

    def value_at(p):
        _, log_probs, _ = forward_batch(p, obs, spec)
        return float(np.mean(log_probs[np.arange(4), [0, 1, 2, 0]]))

    rng = np.random.default_rng(2)
    coords = rng.choice(params.size, size=40, replace=False)
    h = 1e-6
    for i in coords:
        plus, minus = params.copy(), params.copy()
        plus[i] += h
        minus[i] -= h
        fd = (value_at(plus) - value_at(minus)) / (2.0 * h)
        assert abs(grad[i] - fd) < 1e-8 or abs(grad[i] - fd) / max(abs(fd), 1e-12) < 1e-5


def test_grad_of_value_head_leaves_policy_head_untouched():
    spec = PolicySpec(obs_dim=6, hidden=(8,), actions=3)
    params = init_params(spec, seed=6)
    obs = np.random.default_rng(3).uniform(-1, 1, size=(2, 6))
    grad = grad_scalar(params, lambda p: tape.mean(p.values(obs)), spec)
    # policy-head block: after the trunk (6*8+8) come 8*3+3 entries
    head = slice(56, 56 + 27)
    assert np.all(grad[head] == 0.0)
    assert np.any(grad[:56] != 0.0)


def test_sampling_is_inverse_cdf():
    params = init_params(seed=0)
    obs = _obs_batch(1, seed=13)[0]
    out = forward(params, obs)

    class FixedRng:
        def __init__(self, u):
            self.u = u

        def random(self):
            return self.u

    cdf = np.cumsum(out.action_probs)
    for u, expected in [
        (cdf[0] / 2.0, 0),
        (cdf[0], 1),  # half-open cells: a boundary draw lands in the next one
        ((cdf[1] + cdf[2]) / 2.0, 2),
        (0.999999999, 4),
    ]:
        action, log_prob = sample(params, obs, FixedRng(u))
        assert action == expected
        assert log_prob == float(out.log_probs[action])


def test_sample_frequencies_track_probabilities():
    params = init_params(seed=9)
    obs = _obs_batch(1, seed=17)[0]
    probs = forward(params, obs).action_probs
    rng = np.random.default_rng(23)
    counts = np.zeros(ACTION_COUNT)
    n = 20000
    for _ in range(n):
        action, _ = sample(params, obs, rng)
        counts[action] += 1
    np.testing.assert_allclose(counts / n, probs, atol=0.015)


def test_spec_round_trips_through_dict():
    spec = PolicySpec(obs_dim=10, hidden=(32, 16), actions=4)
    assert PolicySpec.from_dict(spec.to_dict()) == spec
