"""Policy/value network over flat float64 parameter vectors.

Two forward paths exist on purpose: a plain numpy path for rollouts and a
taped path used whenever gradients are needed. Both share the same
parameter layout, and tests hold them to identical outputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from behaviorbench.errors import ContractViolationError
from behaviorbench.policy import tape
from behaviorbench.policy.tape import Node

OBS_DIM = 25
ACTION_COUNT = 5


@dataclass(frozen=True)
class PolicySpec:
    """Shape descriptor of the network.

    The trunk is shared; the last hidden layer feeds both the action
    logits and the scalar value head.
    """

    obs_dim: int = OBS_DIM
    hidden: tuple[int, ...] = (64, 64)
    actions: int = ACTION_COUNT
    activation: str = "tanh"

    def layer_dims(self) -> list[tuple[int, int]]:
        """(fan_in, fan_out) of trunk layers, then policy head, then value head."""
        dims = []
        width = self.obs_dim
        for h in self.hidden:
            dims.append((width, h))
            width = h
        dims.append((width, self.actions))
        dims.append((width, 1))
        return dims

    @property
    def param_count(self) -> int:
        return sum(i * o + o for i, o in self.layer_dims())

    def to_dict(self) -> dict:
        return {
            "obs_dim": self.obs_dim,
            "hidden": list(self.hidden),
            "actions": self.actions,
            "activation": self.activation,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PolicySpec":
        return cls(
            obs_dim=int(data["obs_dim"]),
            hidden=tuple(int(h) for h in data["hidden"]),
            actions=int(data["actions"]),
            activation=str(data.get("activation", "tanh")),
        )


@dataclass
class PolicyOutput:
    """Distribution over actions plus the state-value estimate."""

    action_probs: np.ndarray
    log_probs: np.ndarray
    value: float


def _orthogonalish(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    """Matrix with orthonormal rows or columns, sign-fixed for determinism."""
    a = rng.standard_normal((max(fan_in, fan_out), min(fan_in, fan_out)))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    if fan_in < fan_out:
        q = q.T
    return q


def init_params(spec: PolicySpec | None = None, seed: int = 0) -> np.ndarray:
    """Seeded initialization: scaled orthogonal-style weights, zero biases.

    Hidden layers use gain sqrt(2); the policy head is shrunk by 0.01 so
    the initial distribution is near uniform; the value head uses gain 1.
    """
    spec = spec or PolicySpec()
    rng = np.random.default_rng(seed)
    dims = spec.layer_dims()
    gains = [np.sqrt(2.0)] * len(spec.hidden) + [0.01, 1.0]
    chunks = []
    for (fan_in, fan_out), gain in zip(dims, gains):
        w = gain * _orthogonalish(rng, fan_in, fan_out)
        chunks.append(w.reshape(-1))
        chunks.append(np.zeros(fan_out))
    return np.concatenate(chunks)


def _check_params(params: np.ndarray, spec: PolicySpec) -> np.ndarray:
    params = np.asarray(params, dtype=np.float64)
    if params.shape != (spec.param_count,):
        raise ContractViolationError(
            f"parameter vector has shape {params.shape}, expected ({spec.param_count},)"
        )
    return params


def _layer_slices(spec: PolicySpec) -> list[tuple[int, int, int, int]]:
    """(w_start, w_stop, b_stop, fan_in) per layer in flat-vector order."""
    out = []
    offset = 0
    for fan_in, fan_out in spec.layer_dims():
        w_stop = offset + fan_in * fan_out
        b_stop = w_stop + fan_out
        out.append((offset, w_stop, b_stop, fan_in))
        offset = b_stop
    return out


def _flat_obs(obs: np.ndarray, spec: PolicySpec) -> np.ndarray:
    flat = np.asarray(obs, dtype=np.float64).reshape(-1)
    if flat.shape != (spec.obs_dim,):
        raise ContractViolationError(
            f"observation has {flat.size} entries, expected {spec.obs_dim}"
        )
    if not np.all(np.isfinite(flat)):
        raise ContractViolationError("observation contains non-finite entries")
    return flat


def forward_batch(
    params: np.ndarray, obs_batch: np.ndarray, spec: PolicySpec | None = None
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Fast path: (action_probs, log_probs, values) for a (B, obs_dim) batch."""
    spec = spec or PolicySpec()
    params = _check_params(params, spec)
    x = np.asarray(obs_batch, dtype=np.float64)
    slices = _layer_slices(spec)
    for w0, w1, b1, fan_in in slices[: len(spec.hidden)]:
        w = params[w0:w1].reshape(fan_in, -1)
        x = np.tanh(x @ w + params[w1:b1])
    w0, w1, b1, fan_in = slices[-2]
    logits = x @ params[w0:w1].reshape(fan_in, -1) + params[w1:b1]
    w0, w1, b1, fan_in = slices[-1]
    values = (x @ params[w0:w1].reshape(fan_in, -1) + params[w1:b1])[:, 0]

    shifted = logits - logits.max(axis=-1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    return np.exp(log_probs), log_probs, values


def forward(
    params: np.ndarray, obs: np.ndarray, spec: PolicySpec | None = None
) -> PolicyOutput:
    """Policy output for a single 5x5 (or flat) observation."""
    spec = spec or PolicySpec()
    flat = _flat_obs(obs, spec)
    probs, log_probs, values = forward_batch(params, flat[None, :], spec)
    return PolicyOutput(
        action_probs=probs[0], log_probs=log_probs[0], value=float(values[0])
    )


def sample(
    params: np.ndarray,
    obs: np.ndarray,
    rng: np.random.Generator,
    spec: PolicySpec | None = None,
) -> tuple[int, float]:
    """Inverse-CDF categorical draw; returns (action, log_prob of it)."""
    out = forward(params, obs, spec)
    u = rng.random()
    cdf = np.cumsum(out.action_probs)
    action = int(np.searchsorted(cdf, u, side="right"))
    action = min(action, len(out.action_probs) - 1)
    return action, float(out.log_probs[action])


class TapedPolicy:
    """Differentiable view of the network for one parameter vector.

    Scalar functionals are built by combining the nodes returned here with
    the ops in the tape module; grad_scalar() then evaluates the exact
    reverse-mode gradient with respect to the flat parameters.
    """

    def __init__(self, params: np.ndarray, spec: PolicySpec | None = None) -> None:
        self.spec = spec or PolicySpec()
        self.theta = tape.constant(_check_params(params, self.spec))

    def _trunk(self, obs_batch: np.ndarray) -> tuple[Node, list]:
        x = tape.constant(np.atleast_2d(np.asarray(obs_batch, dtype=np.float64)))
        slices = _layer_slices(self.spec)
        for w0, w1, b1, fan_in in slices[: len(self.spec.hidden)]:
            w = tape.reshape(tape.segment(self.theta, w0, w1), (fan_in, -1))
            x = tape.tanh(tape.add(tape.matmul(x, w), tape.segment(self.theta, w1, b1)))
        return x, slices

    def logits(self, obs_batch: np.ndarray) -> Node:
        x, slices = self._trunk(obs_batch)
        w0, w1, b1, fan_in = slices[-2]
        w = tape.reshape(tape.segment(self.theta, w0, w1), (fan_in, -1))
        return tape.add(tape.matmul(x, w), tape.segment(self.theta, w1, b1))

    def log_probs(self, obs_batch: np.ndarray) -> Node:
        return tape.log_softmax(self.logits(obs_batch))

    def probs(self, obs_batch: np.ndarray) -> Node:
        return tape.softmax(self.logits(obs_batch))

    def values(self, obs_batch: np.ndarray) -> Node:
        x, slices = self._trunk(obs_batch)
        w0, w1, b1, fan_in = slices[-1]
        w = tape.reshape(tape.segment(self.theta, w0, w1), (fan_in, -1))
        out = tape.add(tape.matmul(x, w), tape.segment(self.theta, w1, b1))
        return tape.reshape(out, (-1,))


def grad_scalar(
    params: np.ndarray,
    scalar_fn: Callable[[TapedPolicy], Node],
    spec: PolicySpec | None = None,
) -> np.ndarray:
    """Exact gradient of scalar_fn(policy) with respect to the flat parameters.

    Returns a vector of the same length as params; parameters the scalar
    does not touch get zero entries.
    """
    policy = TapedPolicy(params, spec)
    root = scalar_fn(policy)
    tape.backward(root)
    grad = policy.theta.grad
    if grad is None:
        return np.zeros_like(policy.theta.value)
    return np.asarray(grad, dtype=np.float64)
