"""Exact Shapley attribution of a behavior target to observed features.

The value of a feature coalition C is the target re-evaluated under the
coalition-marginalized policy: the policy's action distribution at each
state is replaced by its average over states that agree with it on the
features in C. Observing more features sharpens the conditioning; the
Shapley value splits the resulting change in the target fairly across
features.

Every coalition is enumerated, so results satisfy the Shapley axioms up
to floating-point error; the flip side is the hard cap on how many
feature groups are allowed.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from behaviorbench.errors import (
    ConfigurationError,
    ContractViolationError,
    TractabilityError,
)
from behaviorbench.explain.toy_mdp import (
    TabularMdp,
    check_policy_table,
    expected_return,
    occupancy,
)
from behaviorbench.measures.measure import BehaviorMeasure, evaluate_with
from behaviorbench.policy.network import PolicySpec, forward_batch

MAX_PLAYERS = 20
EFFICIENCY_TOLERANCE = 1e-9


@dataclass
class ShapleyReport:
    """Per-feature attribution with its bookkeeping.

    values[i] is the contribution of feature group i; they always sum to
    full - baseline (checked at construction), where baseline is the
    target with nothing observed and full is the target with every group
    observed.
    """

    feature_names: list[str]
    values: np.ndarray
    baseline: float
    full: float
    target_name: str = ""
    mode: str = ""
    groups: list[list[int]] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if len(self.values) != len(self.feature_names):
            raise ContractViolationError("one value per feature name required")
        if not np.all(np.isfinite(self.values)):
            raise ContractViolationError("attribution values must be finite")
        gap = abs(float(self.values.sum()) - (self.full - self.baseline))
        if gap > EFFICIENCY_TOLERANCE:
            raise ContractViolationError(
                f"attributions sum to {self.values.sum()!r} but the target "
                f"moved by {self.full - self.baseline!r} (gap {gap:.3e})"
            )

    def top_k(self, k: int = 5) -> list[tuple[str, float]]:
        order = np.argsort(-np.abs(self.values), kind="stable")[:k]
        return [(self.feature_names[i], float(self.values[i])) for i in order]

    def to_dict(self) -> dict[str, Any]:
        return {
            "target": self.target_name,
            "mode": self.mode,
            "baseline": self.baseline,
            "full": self.full,
            "features": [
                {"feature": name, "value": float(v), "indices": list(group)}
                for name, v, group in zip(
                    self.feature_names, self.values, self.groups or [[]] * len(self.values)
                )
            ],
        }

    def save_json(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8", newline="\n") as handle:
            json.dump(self.to_dict(), handle, indent=2)
            handle.write("\n")

    def save_csv(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(["feature", "value"])
            for name, v in zip(self.feature_names, self.values):
                writer.writerow([name, repr(float(v))])


def exact_shapley(
    value_fn: Callable[[int], float], n_players: int
) -> tuple[np.ndarray, float, float]:
    """Shapley values of a coalition game given by a bitmask value function.

    value_fn receives a coalition as an integer bitmask over players.
    Returns (values, v(empty), v(all)). All 2^n coalitions are evaluated
    once each.
    """
    if n_players < 1:
        raise ConfigurationError("at least one feature group is required")
    if n_players > MAX_PLAYERS:
        raise TractabilityError(
            f"{n_players} feature groups would need {2 ** n_players} coalition "
            f"evaluations; the exact method is capped at {MAX_PLAYERS}"
        )
    cache = [value_fn(mask) for mask in range(2**n_players)]
    fact = [math.factorial(i) for i in range(n_players + 1)]
    denom = fact[n_players]
    phi = np.zeros(n_players)
    for i in range(n_players):
        bit = 1 << i
        for mask in range(2**n_players):
            if mask & bit:
                continue
            size = bin(mask).count("1")
            weight = fact[size] * fact[n_players - size - 1] / denom
            phi[i] += weight * (cache[mask | bit] - cache[mask])
    return phi, cache[0], cache[-1]


def _check_groups(
    groups: Sequence[Sequence[int]] | None, n_features: int
) -> list[list[int]]:
    if groups is None:
        return [[i] for i in range(n_features)]
    seen: set[int] = set()
    out = []
    for group in groups:
        idx = [int(i) for i in group]
        if not idx:
            raise ConfigurationError("feature groups must be non-empty")
        for i in idx:
            if not 0 <= i < n_features:
                raise ConfigurationError(
                    f"feature index {i} outside [0, {n_features})"
                )
            if i in seen:
                raise ConfigurationError(f"feature index {i} appears in two groups")
            seen.add(i)
        out.append(idx)
    return out


def _group_names(
    groups: list[list[int]], names: Sequence[str] | None
) -> list[str]:
    if names is not None:
        if len(names) != len(groups):
            raise ConfigurationError("one name per feature group required")
        return [str(n) for n in names]
    return ["+".join(f"f{i}" for i in group) for group in groups]


def _coalition_columns(groups: list[list[int]], mask: int) -> list[int]:
    cols: list[int] = []
    for i, group in enumerate(groups):
        if mask & (1 << i):
            cols.extend(group)
    return cols


def marginalized_policy_table(
    mdp: TabularMdp,
    policy: np.ndarray,
    columns: Sequence[int],
    weights: np.ndarray,
    tolerance: float = 1e-6,
) -> np.ndarray:
    """Policy with only the given feature columns observed.

    Each state's action distribution becomes the weight-averaged mixture
    over states indistinguishable from it on the observed columns. With
    no columns the result is the single weight-averaged distribution
    everywhere. Zero-weight match sets fall back to a uniform mixture so
    unreachable states still get a distribution.
    """
    policy = check_policy_table(mdp, policy)
    cols = list(columns)
    out = np.empty_like(policy)
    feats = mdp.features[:, cols] if cols else None
    for s in range(mdp.n_states):
        if feats is None:
            match = np.ones(mdp.n_states, dtype=bool)
        else:
            match = np.all(np.abs(feats - feats[s]) <= tolerance, axis=1)
        w = weights * match
        total = w.sum()
        if total <= 0.0:
            w = match.astype(np.float64)
            total = w.sum()
        out[s] = (w @ policy) / total
    return out


def _empirical_probs_fn(
    dataset: np.ndarray,
    base_probs: np.ndarray,
    columns: Sequence[int],
    tolerance: float,
) -> Callable[[np.ndarray], np.ndarray]:
    """Marginalized observation-to-probabilities map over a dataset.

    Queries average the policy's distributions over all dataset rows
    matching the query on the observed columns within the tolerance;
    queries matching nothing fall back to the full-dataset average, which
    is also the no-columns behavior.
    """
    cols = list(columns)
    mean_probs = base_probs.mean(axis=0)

    def probs_fn(batch: np.ndarray) -> np.ndarray:
        batch = np.asarray(batch, dtype=np.float64)
        out = np.empty((batch.shape[0], base_probs.shape[1]))
        for row, query in enumerate(batch):
            if not cols:
                out[row] = mean_probs
                continue
            match = np.all(
                np.abs(dataset[:, cols] - query[cols]) <= tolerance, axis=1
            )
            if match.any():
                out[row] = base_probs[match].mean(axis=0)
            else:
                out[row] = mean_probs
        return out

    return probs_fn


def behavior_shapley(
    target: BehaviorMeasure | Callable | str,
    groups: Sequence[Sequence[int]] | None = None,
    dataset: np.ndarray | None = None,
    policy: np.ndarray | None = None,
    mdp: TabularMdp | None = None,
    tolerance: float = 1e-6,
    spec: PolicySpec | None = None,
    feature_names: Sequence[str] | None = None,
) -> ShapleyReport:
    """Exact per-feature attribution of a target under marginalization.

    Two modes share the same coalition game and differ only in how the
    marginalized policy is built:

    * tabular (mdp given): ``policy`` is a (states, actions) table; the
      mixture weights are the policy's exact discounted occupancy; the
      target is ``"return"`` (expected discounted return) or a callable
      receiving the marginalized table.
    * empirical (no mdp): ``policy`` is a flat parameter vector;
      ``dataset`` is a (rows, obs_dim) array of observations whose
      distributions are averaged by feature matching; the target is a
      behavior measure or a callable receiving a probability function.
      The dataset should contain the observations the target reads.

    Features outside every group are never observed in any coalition.
    """
    if mdp is not None:
        policy_table = check_policy_table(mdp, policy)
        group_list = _check_groups(groups, mdp.n_features)
        weights = occupancy(mdp, policy_table)
        if isinstance(target, str):
            if target != "return":
                raise ConfigurationError(
                    f"unknown tabular target {target!r}; expected 'return'"
                )
            target_fn = lambda table: expected_return(mdp, table)
            target_name = "return"
        elif isinstance(target, BehaviorMeasure):
            raise ConfigurationError(
                "behavior measures read observations, not tabular states; "
                "pass a callable or use empirical mode"
            )
        else:
            target_fn = target
            target_name = getattr(target, "__name__", "callable")

        def value_fn(mask: int) -> float:
            cols = _coalition_columns(group_list, mask)
            table = marginalized_policy_table(
                mdp, policy_table, cols, weights, tolerance
            )
            return float(target_fn(table))

        mode = "tabular"
    else:
        if dataset is None or policy is None:
            raise ConfigurationError(
                "empirical mode needs a dataset of observations and policy "
                "parameters"
            )
        data = np.asarray(dataset, dtype=np.float64)
        if data.ndim != 2 or data.shape[0] == 0:
            raise ConfigurationError("dataset must be a non-empty (rows, dim) array")
        group_list = _check_groups(groups, data.shape[1])
        base_probs = forward_batch(policy, data, spec)[0]
        if isinstance(target, BehaviorMeasure):
            target_fn = lambda fn: evaluate_with(target, fn)
            target_name = target.name
        elif isinstance(target, str):
            raise ConfigurationError(
                "empirical mode is offline; expected-return targets need "
                "the tabular mode"
            )
        else:
            target_fn = target
            target_name = getattr(target, "__name__", "callable")

        def value_fn(mask: int) -> float:
            cols = _coalition_columns(group_list, mask)
            fn = _empirical_probs_fn(data, base_probs, cols, tolerance)
            return float(target_fn(fn))

        mode = "empirical"

    values, baseline, full = exact_shapley(value_fn, len(group_list))
    return ShapleyReport(
        feature_names=_group_names(group_list, feature_names),
        values=values,
        baseline=baseline,
        full=full,
        target_name=target_name,
        mode=mode,
        groups=group_list,
    )
