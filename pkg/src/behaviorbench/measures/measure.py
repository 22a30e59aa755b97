"""Scalar behavior measures over policy action distributions.

A measure maps a parameter vector to a scalar by querying the policy's
action probabilities at fixed observations. Four forms cover the useful
space:

* ``mean_action_prob``: expected probability of the paired action over a
  weighted scenario set.
* ``observation_contrast``: probability of one action at one observation
  minus the same action's probability at another.
* ``action_contrast``: probability difference between two actions at a
  single observation.
* ``weighted_combination``: fixed linear combination of child measures.

Evaluation is exact (no sampling), and gradients come from the taped
policy, so a measure can drive both reporting and attribution.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from behaviorbench.env.types import Action
from behaviorbench.errors import ConfigurationError
from behaviorbench.measures.scenario import (
    ScenarioSet,
    _coerce_action,
    _coerce_observation,
)
from behaviorbench.policy import tape
from behaviorbench.policy.network import (
    PolicySpec,
    TapedPolicy,
    forward_batch,
    grad_scalar,
)
from behaviorbench.policy.tape import Node

MEASURE_FORMAT = "behaviorbench-measure"
MEASURE_VERSION = 1

FORMS = (
    "mean_action_prob",
    "observation_contrast",
    "action_contrast",
    "weighted_combination",
)


@dataclass
class BehaviorMeasure:
    """Declarative description of one scalar functional of the policy.

    Only the fields relevant to ``form`` may be set; the constructor
    rejects incomplete or contradictory definitions so a measure loaded
    from disk is usable without further checks.
    """

    name: str
    form: str
    scenarios: ScenarioSet | None = None
    observation: np.ndarray | None = None
    observation_p: np.ndarray | None = None
    observation_q: np.ndarray | None = None
    action: Action | None = None
    action_p: Action | None = None
    action_q: Action | None = None
    children: tuple["BehaviorMeasure", ...] = ()
    coefficients: tuple[float, ...] = ()
    provenance: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.form not in FORMS:
            raise ConfigurationError(
                f"unknown measure form {self.form!r}; expected one of {FORMS}"
            )
        if self.form == "mean_action_prob":
            if self.scenarios is None:
                raise ConfigurationError(
                    f"measure {self.name!r} needs a scenario set"
                )
        elif self.form == "observation_contrast":
            if self.observation_p is None or self.observation_q is None:
                raise ConfigurationError(
                    f"measure {self.name!r} needs two observations to contrast"
                )
            if self.action is None:
                raise ConfigurationError(
                    f"measure {self.name!r} needs the action whose probability "
                    "is contrasted"
                )
            self.observation_p = _coerce_observation(self.observation_p)
            self.observation_q = _coerce_observation(self.observation_q)
            self.action = _coerce_action(self.action)
        elif self.form == "action_contrast":
            if self.observation is None:
                raise ConfigurationError(
                    f"measure {self.name!r} needs an observation"
                )
            if self.action_p is None or self.action_q is None:
                raise ConfigurationError(
                    f"measure {self.name!r} needs two actions to contrast"
                )
            self.observation = _coerce_observation(self.observation)
            self.action_p = _coerce_action(self.action_p)
            self.action_q = _coerce_action(self.action_q)
        else:
            self.children = tuple(self.children)
            self.coefficients = tuple(float(c) for c in self.coefficients)
            if not self.children:
                raise ConfigurationError(
                    f"measure {self.name!r} combines no children"
                )
            if len(self.children) != len(self.coefficients):
                raise ConfigurationError(
                    f"measure {self.name!r} has {len(self.children)} children "
                    f"but {len(self.coefficients)} coefficients"
                )
            if not all(np.isfinite(self.coefficients)):
                raise ConfigurationError(
                    f"measure {self.name!r} has non-finite coefficients"
                )

    # Convenience constructors, one per form.

    @classmethod
    def mean_action_probability(
        cls, name: str, scenarios: ScenarioSet, **kwargs: Any
    ) -> "BehaviorMeasure":
        return cls(name=name, form="mean_action_prob", scenarios=scenarios, **kwargs)

    @classmethod
    def contrast_observations(
        cls,
        name: str,
        action: Action | int | str,
        observation_p: np.ndarray,
        observation_q: np.ndarray,
        **kwargs: Any,
    ) -> "BehaviorMeasure":
        return cls(
            name=name,
            form="observation_contrast",
            action=action,
            observation_p=observation_p,
            observation_q=observation_q,
            **kwargs,
        )

    @classmethod
    def contrast_actions(
        cls,
        name: str,
        observation: np.ndarray,
        action_p: Action | int | str,
        action_q: Action | int | str,
        **kwargs: Any,
    ) -> "BehaviorMeasure":
        return cls(
            name=name,
            form="action_contrast",
            observation=observation,
            action_p=action_p,
            action_q=action_q,
            **kwargs,
        )

    @classmethod
    def combination(
        cls,
        name: str,
        children: Sequence["BehaviorMeasure"],
        coefficients: Sequence[float],
        **kwargs: Any,
    ) -> "BehaviorMeasure":
        return cls(
            name=name,
            form="weighted_combination",
            children=tuple(children),
            coefficients=tuple(coefficients),
            **kwargs,
        )

    def to_dict(self) -> dict[str, Any]:
        payload: dict[str, Any] = {"name": self.name, "form": self.form}
        if self.form == "mean_action_prob":
            payload["scenarios"] = self.scenarios.to_dict()
        elif self.form == "observation_contrast":
            payload["action"] = self.action.name
            payload["observation_p"] = self.observation_p.reshape(-1).tolist()
            payload["observation_q"] = self.observation_q.reshape(-1).tolist()
        elif self.form == "action_contrast":
            payload["observation"] = self.observation.reshape(-1).tolist()
            payload["action_p"] = self.action_p.name
            payload["action_q"] = self.action_q.name
        else:
            payload["children"] = [
                {"coefficient": c, "measure": child.to_dict()}
                for c, child in zip(self.coefficients, self.children)
            ]
        if self.provenance:
            payload["provenance"] = dict(self.provenance)
        return payload

    @classmethod
    def from_dict(cls, payload: dict[str, Any]) -> "BehaviorMeasure":
        form = payload.get("form")
        common = {
            "name": str(payload.get("name", "")),
            "provenance": dict(payload.get("provenance", {})),
        }
        if form == "mean_action_prob":
            return cls(
                form=form,
                scenarios=ScenarioSet.from_dict(payload["scenarios"]),
                **common,
            )
        if form == "observation_contrast":
            return cls(
                form=form,
                action=payload["action"],
                observation_p=payload["observation_p"],
                observation_q=payload["observation_q"],
                **common,
            )
        if form == "action_contrast":
            return cls(
                form=form,
                observation=payload["observation"],
                action_p=payload["action_p"],
                action_q=payload["action_q"],
                **common,
            )
        if form == "weighted_combination":
            children = []
            coefficients = []
            for item in payload["children"]:
                coefficients.append(float(item["coefficient"]))
                children.append(cls.from_dict(item["measure"]))
            return cls(
                form=form,
                children=tuple(children),
                coefficients=tuple(coefficients),
                **common,
            )
        raise ConfigurationError(
            f"unknown measure form {form!r}; expected one of {FORMS}"
        )


def _flat_batch(observations: np.ndarray) -> np.ndarray:
    obs = np.asarray(observations, dtype=np.float64)
    return obs.reshape(obs.shape[0], -1)


def evaluate_with(measure: BehaviorMeasure, probs_fn) -> float:
    """Value of the measure under an arbitrary probability source.

    ``probs_fn`` maps a (batch, obs_dim) array to (batch, actions) action
    probabilities. This is the purity of the measure made explicit: a
    measure only ever consumes action distributions at its stored
    observations, so anything that can produce those (a network, a
    marginalized policy, a table) can be measured.
    """
    if measure.form == "mean_action_prob":
        sets = measure.scenarios
        probs = np.asarray(probs_fn(_flat_batch(sets.observations())))
        taken = probs[np.arange(len(sets)), sets.actions()]
        return float(np.dot(sets.weights(), taken))
    if measure.form == "observation_contrast":
        batch = np.stack(
            [measure.observation_p.reshape(-1), measure.observation_q.reshape(-1)]
        )
        probs = np.asarray(probs_fn(batch))
        return float(probs[0, int(measure.action)] - probs[1, int(measure.action)])
    if measure.form == "action_contrast":
        probs = np.asarray(probs_fn(measure.observation.reshape(1, -1)))
        return float(probs[0, int(measure.action_p)] - probs[0, int(measure.action_q)])
    return float(
        sum(
            c * evaluate_with(child, probs_fn)
            for c, child in zip(measure.coefficients, measure.children)
        )
    )


def evaluate(
    measure: BehaviorMeasure,
    params: np.ndarray,
    spec: PolicySpec | None = None,
) -> float:
    """Exact value of the measure at the given parameters."""
    return evaluate_with(
        measure, lambda batch: forward_batch(params, batch, spec)[0]
    )


def measure_node(measure: BehaviorMeasure, policy: TapedPolicy) -> Node:
    """The measure as a scalar node on the policy's tape."""
    if measure.form == "mean_action_prob":
        sets = measure.scenarios
        probs = policy.probs(_flat_batch(sets.observations()))
        taken = tape.take_per_row(probs, sets.actions())
        return tape.sum_(tape.mul(taken, tape.constant(sets.weights())))
    if measure.form == "observation_contrast":
        batch = np.stack(
            [measure.observation_p.reshape(-1), measure.observation_q.reshape(-1)]
        )
        probs = policy.probs(batch)
        taken = tape.take_per_row(probs, [int(measure.action), int(measure.action)])
        return tape.sum_(tape.mul(taken, tape.constant(np.array([1.0, -1.0]))))
    if measure.form == "action_contrast":
        flat = measure.observation.reshape(-1)
        probs = policy.probs(np.stack([flat, flat]))
        taken = tape.take_per_row(probs, [int(measure.action_p), int(measure.action_q)])
        return tape.sum_(tape.mul(taken, tape.constant(np.array([1.0, -1.0]))))
    return tape.weighted_sum(
        [measure_node(child, policy) for child in measure.children],
        list(measure.coefficients),
    )


def gradient(
    measure: BehaviorMeasure,
    params: np.ndarray,
    spec: PolicySpec | None = None,
) -> np.ndarray:
    """Exact gradient of the measure with respect to the flat parameters."""
    return grad_scalar(params, lambda policy: measure_node(measure, policy), spec)


def evaluation_report(
    measure: BehaviorMeasure,
    params: np.ndarray,
    spec: PolicySpec | None = None,
) -> dict[str, Any]:
    """Value plus a JSON-friendly breakdown of where it comes from.

    Scenario forms itemize per-entry probabilities and contributions;
    combinations nest one report per child.
    """
    report: dict[str, Any] = {"name": measure.name, "form": measure.form}
    if measure.form == "mean_action_prob":
        sets = measure.scenarios
        probs, _, _ = forward_batch(params, _flat_batch(sets.observations()), spec)
        entries = []
        total = 0.0
        for row, entry in zip(probs, sets.entries):
            prob = float(row[int(entry.action)])
            contribution = entry.weight * prob
            total += contribution
            item: dict[str, Any] = {
                "action": entry.action.name,
                "weight": entry.weight,
                "action_prob": prob,
                "contribution": contribution,
            }
            if entry.provenance:
                item["provenance"] = dict(entry.provenance)
            entries.append(item)
        report["value"] = total
        report["entries"] = entries
    elif measure.form == "observation_contrast":
        batch = np.stack(
            [measure.observation_p.reshape(-1), measure.observation_q.reshape(-1)]
        )
        probs, _, _ = forward_batch(params, batch, spec)
        a = int(measure.action)
        report["action"] = measure.action.name
        report["prob_p"] = float(probs[0, a])
        report["prob_q"] = float(probs[1, a])
        report["value"] = float(probs[0, a] - probs[1, a])
    elif measure.form == "action_contrast":
        probs, _, _ = forward_batch(params, measure.observation.reshape(1, -1), spec)
        report["action_p"] = measure.action_p.name
        report["action_q"] = measure.action_q.name
        report["prob_p"] = float(probs[0, int(measure.action_p)])
        report["prob_q"] = float(probs[0, int(measure.action_q)])
        report["value"] = report["prob_p"] - report["prob_q"]
    else:
        children = []
        total = 0.0
        for c, child in zip(measure.coefficients, measure.children):
            sub = evaluation_report(child, params, spec)
            total += c * sub["value"]
            children.append({"coefficient": c, "report": sub})
        report["value"] = total
        report["children"] = children
    return report


def save_measure(measure: BehaviorMeasure, path: str | Path) -> None:
    payload = {"format": MEASURE_FORMAT, "version": MEASURE_VERSION}
    payload.update(measure.to_dict())
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        json.dump(payload, handle, indent=2)
        handle.write("\n")


def load_measure(path: str | Path) -> BehaviorMeasure:
    """Read a measure file; bare scenario-set files load as mean_action_prob."""
    path = Path(path)
    with path.open("r", encoding="utf-8") as handle:
        payload = json.load(handle)
    if "form" in payload:
        fmt = payload.get("format", MEASURE_FORMAT)
        version = payload.get("version", MEASURE_VERSION)
        if fmt != MEASURE_FORMAT:
            raise ValueError(f"{path}: unexpected file format {fmt!r}")
        if version != MEASURE_VERSION:
            raise ValueError(f"{path}: unsupported measure version {version!r}")
        return BehaviorMeasure.from_dict(payload)
    if "entries" in payload:
        sets = ScenarioSet.from_dict(payload)
        return BehaviorMeasure.mean_action_probability(sets.name, sets)
    raise ValueError(f"{path}: neither a measure file nor a scenario set")
