"""Small tabular MDP with exact policy evaluation.

Feature attribution needs a bed where everything is computable in closed
form: state values from a linear solve, discounted occupancy likewise,
and features small enough to enumerate every coalition. The chain world
here is that bed. It is not a benchmark; it exists to validate the
attribution machinery against exact answers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from behaviorbench.errors import ContractViolationError


@dataclass
class TabularMdp:
    """Finite MDP with a feature vector attached to every state.

    Args:
        transitions: (states, actions, states) array of probabilities;
            each (s, a) row must sum to 1.
        rewards: Per-state reward collected on occupying the state.
        gamma: Discount factor in [0, 1).
        features: (states, features) matrix describing each state; this
            is what coalitions of observed features index into.
        start: Initial state distribution.
    """

    transitions: np.ndarray
    rewards: np.ndarray
    gamma: float
    features: np.ndarray
    start: np.ndarray

    def __post_init__(self) -> None:
        self.transitions = np.asarray(self.transitions, dtype=np.float64)
        self.rewards = np.asarray(self.rewards, dtype=np.float64)
        self.features = np.asarray(self.features, dtype=np.float64)
        self.start = np.asarray(self.start, dtype=np.float64)
        s, a, s2 = self.transitions.shape
        if s != s2:
            raise ContractViolationError("transition tensor must be (S, A, S)")
        if not np.allclose(self.transitions.sum(axis=2), 1.0, atol=1e-12):
            raise ContractViolationError("transition rows must sum to 1")
        if self.rewards.shape != (s,):
            raise ContractViolationError("rewards must be per-state")
        if self.features.shape[0] != s:
            raise ContractViolationError("one feature row per state required")
        if self.start.shape != (s,) or not np.isclose(self.start.sum(), 1.0):
            raise ContractViolationError("start must be a distribution over states")
        if not (0.0 <= self.gamma < 1.0):
            raise ContractViolationError("gamma must lie in [0, 1)")

    @property
    def n_states(self) -> int:
        return self.transitions.shape[0]

    @property
    def n_actions(self) -> int:
        return self.transitions.shape[1]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]


def check_policy_table(mdp: TabularMdp, policy: np.ndarray) -> np.ndarray:
    policy = np.asarray(policy, dtype=np.float64)
    if policy.shape != (mdp.n_states, mdp.n_actions):
        raise ContractViolationError(
            f"policy table must be ({mdp.n_states}, {mdp.n_actions}), "
            f"got {policy.shape}"
        )
    if np.any(policy < 0) or not np.allclose(policy.sum(axis=1), 1.0, atol=1e-9):
        raise ContractViolationError("policy rows must be distributions")
    return policy


def _policy_transition(mdp: TabularMdp, policy: np.ndarray) -> np.ndarray:
    """State-to-state transition matrix under the policy."""
    return np.einsum("sa,sat->st", policy, mdp.transitions)


def state_values(mdp: TabularMdp, policy: np.ndarray) -> np.ndarray:
    """Exact V(s) from the Bellman linear system."""
    policy = check_policy_table(mdp, policy)
    p = _policy_transition(mdp, policy)
    eye = np.eye(mdp.n_states)
    return np.linalg.solve(eye - mdp.gamma * p, mdp.rewards)


def expected_return(mdp: TabularMdp, policy: np.ndarray) -> float:
    """Start-weighted expected discounted return."""
    return float(mdp.start @ state_values(mdp, policy))


def occupancy(mdp: TabularMdp, policy: np.ndarray) -> np.ndarray:
    """Normalized discounted state-visitation distribution.

    d = (1 - gamma) * (I - gamma * P_pi^T)^(-1) start; sums to 1 and is
    the natural weighting when averaging per-state quantities over the
    policy's own experience.
    """
    policy = check_policy_table(mdp, policy)
    p = _policy_transition(mdp, policy)
    eye = np.eye(mdp.n_states)
    d = (1.0 - mdp.gamma) * np.linalg.solve(eye - mdp.gamma * p.T, mdp.start)
    return d / d.sum()


def toy_chain() -> TabularMdp:
    """Five-state chain with noisy moves and a rewarding terminal end.

    Action 1 tries to move right, action 0 tries to move left; the
    intended move succeeds with probability 0.9, otherwise the opposite
    move happens. Moves off the ends stay put. Only the last state pays
    reward. States are described by the three bits of their index, so the
    feature space is small enough for exact coalition enumeration.
    """
    n = 5
    transitions = np.zeros((n, 2, n))
    for s in range(n):
        left = max(s - 1, 0)
        right = min(s + 1, n - 1)
        transitions[s, 1, right] += 0.9
        transitions[s, 1, left] += 0.1
        transitions[s, 0, left] += 0.9
        transitions[s, 0, right] += 0.1
    rewards = np.zeros(n)
    rewards[n - 1] = 1.0
    features = np.array(
        [[(s >> bit) & 1 for bit in (2, 1, 0)] for s in range(n)],
        dtype=np.float64,
    )
    start = np.zeros(n)
    start[0] = 1.0
    return TabularMdp(
        transitions=transitions,
        rewards=rewards,
        gamma=0.9,
        features=features,
        start=start,
    )
