"""Surrogate-objective loss: gradients, clipping, per-record additivity."""

from __future__ import annotations

import numpy as np
import pytest

from behaviorbench.policy.network import PolicySpec, forward_batch, init_params
from behaviorbench.training.ppo import ppo_loss_grad
from behaviorbench.training.records import RecordBatch

SPEC = PolicySpec(obs_dim=6, hidden=(8,), actions=3)


def _batch(params, n=12, seed=0, adv=None, old_from=None):
    """Records whose old log-probs come from a (possibly different) policy."""
    rng = np.random.default_rng(seed)
    obs = rng.uniform(-1, 1, size=(n, SPEC.obs_dim))
    actions = rng.integers(0, SPEC.actions, size=n)
    source = params if old_from is None else old_from
    _, log_probs, values = forward_batch(source, obs, SPEC)
    advantages = rng.normal(size=n) if adv is None else np.asarray(adv, dtype=float)
    returns = values + rng.normal(size=n)
    return RecordBatch(
        observations=obs,
        actions=actions,
        rewards=np.zeros(n),
        log_probs_old=log_probs[np.arange(n), actions],
        values_old=values,
        advantages=advantages,
        returns=returns,
        epochs=np.zeros(n, dtype=int),
        timesteps=np.arange(n),
    )


def test_gradient_matches_finite_differences():
    params = init_params(SPEC, seed=1)
    behind = init_params(SPEC, seed=2)
    batch = _batch(params, seed=3, old_from=behind)
    _, grad, _ = ppo_loss_grad(params, batch, spec=SPEC)

    def loss_at(p):
        return ppo_loss_grad(p, batch, spec=SPEC)[0]

    rng = np.random.default_rng(4)
    h = 1e-6
    for i in rng.choice(params.size, size=40, replace=False):
        plus, minus = params.copy(), params.copy()
        plus[i] += h
        minus[i] -= h
        fd = (loss_at(plus) - loss_at(minus)) / (2.0 * h)
        assert abs(grad[i] - fd) < 1e-8 or abs(grad[i] - fd) / max(abs(fd), 1e-12) < 1e-5


def test_per_record_gradients_average_to_batch_gradient():
    params = init_params(SPEC, seed=5)
    batch = _batch(params, n=9, seed=6, old_from=init_params(SPEC, seed=7))
    _, grad, extras = ppo_loss_grad(params, batch, spec=SPEC, per_record=True)
    rows = extras["per_record_grads"]
    assert rows.shape == (9, params.size)
    np.testing.assert_allclose(rows.mean(axis=0), grad, atol=1e-10)


def test_saturated_clip_blocks_the_policy_gradient():
    params = init_params(SPEC, seed=8)
    batch = _batch(params, n=6, seed=9, adv=-np.ones(6))
    # pretend the behavior policy liked these actions much more, pushing
    # every ratio well below the clip window
    batch.log_probs_old = batch.log_probs_old + 0.7
    _, grad, _ = ppo_loss_grad(
        params, batch, clip_eps=0.2, value_coef=0.0, entropy_coef=0.0, spec=SPEC
    )
    np.testing.assert_allclose(grad, 0.0, atol=1e-15)


def test_unclipped_region_gradient_flows():
    params = init_params(SPEC, seed=8)
    batch = _batch(params, n=6, seed=9, adv=np.ones(6))
    _, grad, _ = ppo_loss_grad(
        params, batch, value_coef=0.0, entropy_coef=0.0, spec=SPEC
    )
    assert np.any(grad != 0.0)


def test_loss_decomposition_is_exact():
    params = init_params(SPEC, seed=10)
    batch = _batch(params, seed=11, old_from=init_params(SPEC, seed=12))
    loss, _, extras = ppo_loss_grad(
        params, batch, value_coef=0.5, entropy_coef=0.01, spec=SPEC
    )
    recomposed = (
        extras["policy_loss"] + 0.5 * extras["value_loss"] - 0.01 * extras["entropy"]
    )
    assert loss == pytest.approx(recomposed, abs=1e-12)
    assert loss == pytest.approx(extras["loss"], abs=1e-15)


def test_value_loss_is_mean_squared_error():
    params = init_params(SPEC, seed=13)
    batch = _batch(params, seed=14)
    _, _, extras = ppo_loss_grad(params, batch, spec=SPEC)
    _, _, values = forward_batch(params, batch.observations, SPEC)
    expected = float(np.mean((values - batch.returns) ** 2))
    assert extras["value_loss"] == pytest.approx(expected, abs=1e-12)


def test_entropy_part_matches_direct_formula():
    params = init_params(SPEC, seed=15)
    batch = _batch(params, seed=16)
    _, _, extras = ppo_loss_grad(params, batch, spec=SPEC)
    probs, log_probs, _ = forward_batch(params, batch.observations, SPEC)
    expected = float(-np.mean(np.sum(probs * log_probs, axis=1)))
    assert extras["entropy"] == pytest.approx(expected, abs=1e-12)


def test_entropy_bonus_pushes_toward_uniform():
    rng = np.random.default_rng(17)
    params = init_params(SPEC, seed=18) + 0.3 * rng.normal(size=SPEC.param_count)
    batch = _batch(params, seed=19, adv=np.zeros(12))
    batch.returns = batch.values_old.copy()  # silence the value term too
    _, grad, extras = ppo_loss_grad(
        params, batch, value_coef=0.5, entropy_coef=0.05, spec=SPEC
    )
    stepped = params - 0.1 * grad
    _, _, after = ppo_loss_grad(
        stepped, batch, value_coef=0.5, entropy_coef=0.05, spec=SPEC
    )
    assert after["entropy"] > extras["entropy"]
