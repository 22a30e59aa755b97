"""Clipped-surrogate PPO loss and its exact gradients."""

from __future__ import annotations

import numpy as np

from behaviorbench.policy import tape
from behaviorbench.policy.network import PolicySpec, TapedPolicy
from behaviorbench.training.records import RecordBatch


def _loss_node(
    policy: TapedPolicy,
    batch: RecordBatch,
    clip_eps: float,
    value_coef: float,
    entropy_coef: float,
) -> tuple[tape.Node, dict[str, float]]:
    obs = batch.observations
    log_probs = policy.log_probs(obs)
    chosen = tape.take_per_row(log_probs, batch.actions)
    ratio = tape.exp(chosen - tape.constant(batch.log_probs_old))
    adv = tape.constant(batch.advantages)
    surrogate = tape.minimum(
        tape.mul(ratio, adv),
        tape.mul(tape.clip(ratio, 1.0 - clip_eps, 1.0 + clip_eps), adv),
    )
    policy_loss = -tape.mean(surrogate)

    values = policy.values(obs)
    err = values - tape.constant(batch.returns)
    value_loss = tape.mean(tape.mul(err, err))

    probs = tape.exp(log_probs)
    entropy = -tape.mean(tape.sum_(tape.mul(probs, log_probs), axis=1))

    loss = policy_loss + value_coef * value_loss + (-entropy_coef) * entropy
    parts = {
        "policy_loss": float(policy_loss.value),
        "value_loss": float(value_loss.value),
        "entropy": float(entropy.value),
        "loss": float(loss.value),
    }
    return loss, parts


def ppo_loss_grad(
    params: np.ndarray,
    batch: RecordBatch,
    clip_eps: float = 0.2,
    value_coef: float = 0.5,
    entropy_coef: float = 0.01,
    spec: PolicySpec | None = None,
    per_record: bool = False,
) -> tuple[float, np.ndarray, dict]:
    """Loss value and gradient of the PPO objective on a record batch.

    The objective is clipped surrogate plus value-error penalty minus the
    entropy bonus, averaged over the batch. Advantages are used exactly as
    stored; normalize beforehand if desired. With ``per_record`` a
    (len(batch), len(params)) matrix of single-record gradients is added
    to the extras dict; their average equals the batch gradient.
    """
    policy = TapedPolicy(params, spec)
    loss, parts = _loss_node(policy, batch, clip_eps, value_coef, entropy_coef)
    tape.backward(loss)
    grad = policy.theta.grad
    grad = np.zeros_like(params) if grad is None else np.asarray(grad)

    extras: dict = dict(parts)
    if per_record:
        rows = np.empty((len(batch), len(params)))
        for i in range(len(batch)):
            single = batch.subset(np.array([i]))
            single_policy = TapedPolicy(params, spec)
            single_loss, _ = _loss_node(
                single_policy, single, clip_eps, value_coef, entropy_coef
            )
            tape.backward(single_loss)
            g = single_policy.theta.grad
            rows[i] = 0.0 if g is None else g
        extras["per_record_grads"] = rows
    return float(loss.value), grad, extras
