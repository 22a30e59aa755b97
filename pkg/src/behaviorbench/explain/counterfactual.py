"""Offline search for nearby parameters exhibiting a target behavior level.

Starting from a reference parameter vector, gradient descent minimizes
the distance of the measure to a requested value plus a KL penalty that
keeps the counterfactual's action distributions close to the reference
on a fixed evaluation observation set. No environment rollouts are
involved; everything is computed from stored observations.

The KL penalty is anchored at a pivot that is re-based onto the current
parameters at a fixed cadence, which lets the search travel further than
a hard anchor would while still reporting the total divergence from the
original parameters at the end.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from behaviorbench.errors import ConfigurationError, TrainingDivergedError
from behaviorbench.measures.measure import BehaviorMeasure, evaluate, measure_node
from behaviorbench.policy import tape
from behaviorbench.policy.network import PolicySpec, TapedPolicy, forward_batch

ARMIJO_C = 1e-4
MIN_STEP = 1e-12


@dataclass
class CounterfactualResult:
    """Outcome of a counterfactual parameter search.

    The trace holds one entry per accepted descent step with the
    objective, measure value, within-segment KL, and accepted step size;
    entries are grouped by pivot segment, and the objective never
    increases inside a segment.
    """

    params: np.ndarray
    achieved: float
    target: float
    kl_from_origin: float
    trace: list[dict[str, Any]] = field(default_factory=list)
    converged: bool = False
    stalled: bool = False

    def to_dict(self) -> dict[str, Any]:
        return {
            "achieved": self.achieved,
            "target": self.target,
            "kl_from_origin": self.kl_from_origin,
            "converged": self.converged,
            "stalled": self.stalled,
            "steps": len(self.trace),
            "trace": self.trace,
        }

    def save_json(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8", newline="\n") as handle:
            json.dump(self.to_dict(), handle, indent=2)
            handle.write("\n")


def _kl_between(pivot_log_probs: np.ndarray, log_probs: np.ndarray) -> float:
    p = np.exp(pivot_log_probs)
    return float((p * (pivot_log_probs - log_probs)).sum(axis=1).mean())


def _distance(diff: float, smoothing: str, delta: float) -> float:
    # the huber form is scaled by 1/delta so it matches |diff| outside the
    # quadratic well instead of flattening the whole objective
    if smoothing == "huber":
        a = abs(diff)
        if a <= delta:
            return 0.5 * diff * diff / delta
        return a - 0.5 * delta
    return abs(diff)


def counterfactual(
    params0: np.ndarray,
    measure: BehaviorMeasure,
    target: float,
    eval_obs: np.ndarray,
    k: float = 1.0,
    pivot_every: int = 25,
    steps: int = 250,
    smoothing: str = "abs",
    huber_delta: float = 1e-3,
    initial_step: float = 1.0,
    spec: PolicySpec | None = None,
) -> CounterfactualResult:
    """Minimize |measure - target| (optionally Huberized) plus k times the
    divergence from the evolving pivot, by line-searched gradient descent.

    Args:
        params0: Reference parameters the search starts from.
        measure: Differentiable behavior measure to steer.
        target: Desired measure value.
        eval_obs: (rows, obs_dim) observations the KL penalty averages
            over; must be non-empty.
        k: KL penalty weight. Larger values pin the result to the
            reference; useful values are domain-specific.
        pivot_every: Steps between re-basing the KL pivot onto the
            current parameters.
        steps: Gradient step budget.
        smoothing: "abs" for the raw absolute distance (subgradient 0 at
            the target), "huber" for a quadratic well of width
            huber_delta around it.
        initial_step: Step size the backtracking line search starts from.

    Raises TrainingDivergedError (with the partial trace attached) if the
    objective or gradient go non-finite; returns early as converged once
    the gradient vanishes, or as stalled when no descent step exists.
    """
    if smoothing not in ("abs", "huber"):
        raise ConfigurationError(f"unknown smoothing {smoothing!r}")
    if pivot_every < 1 or steps < 0:
        raise ConfigurationError("pivot_every must be >= 1 and steps >= 0")
    if k < 0:
        raise ConfigurationError("k must be non-negative")
    eval_obs = np.asarray(eval_obs, dtype=np.float64)
    if eval_obs.ndim != 2 or eval_obs.shape[0] == 0:
        raise ConfigurationError("eval_obs must be a non-empty (rows, dim) array")

    params0 = np.asarray(params0, dtype=np.float64)
    params = params0.copy()
    target = float(target)
    n_eval = eval_obs.shape[0]

    origin_log_probs = forward_batch(params0, eval_obs, spec)[1]
    pivot_log_probs = origin_log_probs

    def objective_grad(theta: np.ndarray) -> tuple[float, np.ndarray, float, float]:
        policy = TapedPolicy(theta, spec)
        m_node = measure_node(measure, policy)
        diff = m_node - target
        if smoothing == "huber":
            dist = tape.huber(diff, huber_delta) * (1.0 / huber_delta)
        else:
            dist = tape.absolute(diff)
        log_probs = policy.log_probs(eval_obs)
        p_pivot = np.exp(pivot_log_probs)
        kl_node = tape.sum_(
            tape.mul(tape.constant(p_pivot), tape.constant(pivot_log_probs) - log_probs)
        ) * (1.0 / n_eval)
        total = tape.add(dist, tape.mul(kl_node, k))
        tape.backward(total)
        grad = policy.theta.grad
        grad = np.zeros_like(theta) if grad is None else np.asarray(grad)
        return float(total.value), grad, float(m_node.value), float(kl_node.value)

    def objective_only(theta: np.ndarray) -> tuple[float, float, float]:
        m = evaluate(measure, theta, spec)
        log_probs = forward_batch(theta, eval_obs, spec)[1]
        kl = _kl_between(pivot_log_probs, log_probs)
        return _distance(m - target, smoothing, huber_delta) + k * kl, m, kl

    trace: list[dict[str, Any]] = []
    result = CounterfactualResult(
        params=params, achieved=0.0, target=target, kl_from_origin=0.0, trace=trace
    )
    alpha = float(initial_step)
    segment = 0

    for step in range(steps):
        if step > 0 and step % pivot_every == 0:
            pivot_log_probs = forward_batch(params, eval_obs, spec)[1]
            segment += 1

        value, grad, m_here, kl_here = objective_grad(params)
        if not np.isfinite(value) or not np.all(np.isfinite(grad)):
            err = TrainingDivergedError(
                f"counterfactual objective went non-finite at step {step}"
            )
            err.trace = trace
            raise err
        grad_norm2 = float(grad @ grad)
        if grad_norm2 == 0.0:
            result.converged = True
            break

        accepted = None
        a = alpha
        while a >= MIN_STEP:
            candidate = params - a * grad
            new_value, new_m, new_kl = objective_only(candidate)
            if np.isfinite(new_value) and new_value <= value - ARMIJO_C * a * grad_norm2:
                accepted = (candidate, new_value, new_m, new_kl, a)
                break
            a *= 0.5
        if accepted is None:
            result.stalled = True
            break

        params, value, m_here, kl_here, a = accepted
        alpha = min(a * 2.0, 1e3)
        trace.append(
            {
                "step": step,
                "segment": segment,
                "objective": value,
                "measure": m_here,
                "kl": kl_here,
                "step_size": a,
            }
        )

    result.params = params
    result.achieved = evaluate(measure, params, spec)
    result.kl_from_origin = _kl_between(
        origin_log_probs, forward_batch(params, eval_obs, spec)[1]
    )
    if not np.isfinite(result.achieved):
        err = TrainingDivergedError("counterfactual produced a non-finite measure")
        err.trace = trace
        raise err
    return result
