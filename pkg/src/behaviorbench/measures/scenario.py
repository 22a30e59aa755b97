"""Weighted observation/action scenario sets.

A scenario set is the data a behavior measure averages over: a list of
observations, each paired with the action of interest and a positive
weight.  Weights must sum to one so the measure is an expectation.
Sets are serialized as JSON with action names spelled out, which keeps
the files readable and independent of enum numbering.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from behaviorbench.env.observation import OBS_COLS, OBS_ROWS
from behaviorbench.env.types import Action
from behaviorbench.errors import ContractViolationError

WEIGHT_TOLERANCE = 1e-9


def _coerce_observation(value: Any) -> np.ndarray:
    obs = np.asarray(value, dtype=np.float64)
    if obs.size != OBS_ROWS * OBS_COLS:
        raise ContractViolationError(
            f"scenario observation must have {OBS_ROWS * OBS_COLS} entries, "
            f"got {obs.size}"
        )
    return obs.reshape(OBS_ROWS, OBS_COLS)


def _coerce_action(value: Any) -> Action:
    if isinstance(value, Action):
        return value
    if isinstance(value, str):
        return Action.from_name(value)
    return Action(int(value))


@dataclass
class ScenarioEntry:
    """One weighted (observation, action) pair.

    provenance carries bookkeeping about where the entry came from,
    typically the epoch and step index of the rollout record it was
    lifted from.  It does not affect evaluation.
    """

    observation: np.ndarray
    action: Action
    weight: float
    provenance: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.observation = _coerce_observation(self.observation)
        self.action = _coerce_action(self.action)
        self.weight = float(self.weight)
        if not self.weight > 0.0:
            raise ContractViolationError(
                f"scenario weights must be positive, got {self.weight}"
            )

    def to_dict(self) -> dict[str, Any]:
        payload: dict[str, Any] = {
            "observation": self.observation.reshape(-1).tolist(),
            "action": self.action.name,
            "weight": self.weight,
        }
        if self.provenance:
            payload["provenance"] = dict(self.provenance)
        return payload

    @classmethod
    def from_dict(cls, payload: dict[str, Any]) -> "ScenarioEntry":
        return cls(
            observation=payload["observation"],
            action=payload["action"],
            weight=payload["weight"],
            provenance=dict(payload.get("provenance", {})),
        )


@dataclass
class ScenarioSet:
    """A named, normalized collection of scenario entries."""

    name: str
    entries: list[ScenarioEntry]
    source: str = ""

    def __post_init__(self) -> None:
        if not self.entries:
            raise ContractViolationError(f"scenario set {self.name!r} is empty")
        total = sum(entry.weight for entry in self.entries)
        if abs(total - 1.0) > WEIGHT_TOLERANCE:
            raise ContractViolationError(
                f"scenario set {self.name!r} weights sum to {total!r}, expected 1"
            )

    def __len__(self) -> int:
        return len(self.entries)

    def observations(self) -> np.ndarray:
        """All observations stacked into a (n, rows, columns) array."""
        return np.stack([entry.observation for entry in self.entries])

    def actions(self) -> np.ndarray:
        return np.array([int(entry.action) for entry in self.entries], dtype=np.int64)

    def weights(self) -> np.ndarray:
        return np.array([entry.weight for entry in self.entries], dtype=np.float64)

    def to_dict(self) -> dict[str, Any]:
        payload: dict[str, Any] = {
            "name": self.name,
            "entries": [entry.to_dict() for entry in self.entries],
        }
        if self.source:
            payload["source"] = self.source
        return payload

    @classmethod
    def from_dict(cls, payload: dict[str, Any]) -> "ScenarioSet":
        return cls(
            name=str(payload["name"]),
            entries=[ScenarioEntry.from_dict(item) for item in payload["entries"]],
            source=str(payload.get("source", "")),
        )

    @classmethod
    def uniform(
        cls,
        name: str,
        pairs: Iterable[tuple[np.ndarray, Action | int | str]],
        source: str = "",
        provenance: Iterable[dict[str, Any]] | None = None,
    ) -> "ScenarioSet":
        """Build a set with equal weights from (observation, action) pairs."""
        pairs = list(pairs)
        if not pairs:
            raise ContractViolationError(f"scenario set {name!r} is empty")
        weight = 1.0 / len(pairs)
        metas = list(provenance) if provenance is not None else [{} for _ in pairs]
        if len(metas) != len(pairs):
            raise ContractViolationError(
                "provenance list length does not match the number of entries"
            )
        entries = [
            ScenarioEntry(observation=obs, action=act, weight=weight, provenance=meta)
            for (obs, act), meta in zip(pairs, metas)
        ]
        return cls(name=name, entries=entries, source=source)


def save_scenario_set(scenario_set: ScenarioSet, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        json.dump(scenario_set.to_dict(), handle, indent=2)
        handle.write("\n")


def load_scenario_set(path: str | Path) -> ScenarioSet:
    path = Path(path)
    with path.open("r", encoding="utf-8") as handle:
        payload = json.load(handle)
    return ScenarioSet.from_dict(payload)
