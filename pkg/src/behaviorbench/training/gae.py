"""Generalized advantage estimation."""

from __future__ import annotations

import numpy as np

from behaviorbench.errors import ContractViolationError


def compute_gae(
    rewards,
    values,
    dones,
    gamma: float = 0.99,
    lam: float = 0.95,
    last_value: float = 0.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Advantages and returns from aligned reward/value/done sequences.

    Advantages follow the backward recursion over temporal-difference
    residuals, cut at terminal steps; returns are advantages plus values.
    ``last_value`` bootstraps the step after the sequence and defaults to
    0, which is correct when the sequence ends at a terminal state.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    dones = np.asarray(dones, dtype=np.float64)
    if not (rewards.shape == values.shape == dones.shape) or rewards.ndim != 1:
        raise ContractViolationError(
            "rewards, values and dones must be 1-D sequences of equal length"
        )

    advantages = np.empty_like(rewards)
    gae = 0.0
    next_value = float(last_value)
    for t in range(len(rewards) - 1, -1, -1):
        nonterminal = 1.0 - dones[t]
        delta = rewards[t] + gamma * next_value * nonterminal - values[t]
        gae = delta + gamma * lam * nonterminal * gae
        advantages[t] = gae
        next_value = values[t]
    return advantages, advantages + values
