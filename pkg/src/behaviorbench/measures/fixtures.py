"""Bundled measure data and a matching synthetic rollout archive.

The package ships one curated measure: the mean probability of risky
maneuvers (left, right, accelerate) in observations captured shortly
before collisions in a reference training run. Tests and the selection
tooling also need an archive containing those same records, which
``write_reference_archive`` fabricates deterministically.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

import numpy as np

from behaviorbench.env.archive import ArchiveHeader, RolloutRecord, write_rollout_archive
from behaviorbench.env.types import Action, RewardBreakdown
from behaviorbench.measures.measure import BehaviorMeasure, load_measure

_DATA_PACKAGE = "behaviorbench.measures"
_DATA_FILE = "data/collision_measure.json"

REFERENCE_ARCHIVE_SEED = 9901


def collision_measure_fixture() -> BehaviorMeasure:
    """The bundled pre-collision maneuver measure."""
    with resources.as_file(
        resources.files(_DATA_PACKAGE).joinpath(_DATA_FILE)
    ) as path:
        return load_measure(path)


def _reward_for(obs: np.ndarray, collided: bool) -> RewardBreakdown:
    """Reward terms consistent with the ego row of an observation."""
    speed = float(obs[0, 3]) * 80.0
    lane = int(round(float(obs[0, 2]) * 16.0 / 4.0))
    collision_term = -1.0 if collided else 0.0
    speed_term = 0.4 * float(np.clip((speed - 20.0) / 10.0, 0.0, 1.0))
    lane_term = 0.1 * lane / 3.0
    total = collision_term + speed_term + lane_term
    return RewardBreakdown(
        collision_term=collision_term,
        speed_term=speed_term,
        lane_term=lane_term,
        total=total,
        normalized=(total + 1.0) / 1.5,
    )


def _scenario_records(measure: BehaviorMeasure) -> list[RolloutRecord]:
    records = []
    for child in measure.children:
        for entry in child.scenarios.entries:
            epoch = int(entry.provenance["epoch"])
            t = int(entry.provenance["t"])
            obs = entry.observation
            # The selected moment, then two follow-up steps ending in the
            # collision that motivated the selection.
            steps = (
                (t, entry.action, False, False),
                (t + 1, Action.IDLE, False, False),
                (t + 2, Action.IDLE, True, True),
            )
            for step_t, action, collided, done in steps:
                records.append(
                    RolloutRecord(
                        epoch=epoch,
                        t=step_t,
                        observation=obs,
                        action=int(action),
                        reward=_reward_for(obs, collided),
                        done=done,
                    )
                )
    records.sort(key=lambda r: (r.epoch, r.t))
    return records


def write_reference_archive(path: str | Path) -> Path:
    """Write the small archive the bundled measure's entries point into.

    Each selected observation appears at its recorded (epoch, t) index,
    followed by two filler steps, the last of which ends the episode with
    a collision. The file is byte-stable across runs.
    """
    path = Path(path)
    measure = collision_measure_fixture()
    header = ArchiveHeader(
        config_hash="reference",
        seed=REFERENCE_ARCHIVE_SEED,
        checkpoint="reference",
    )
    write_rollout_archive(path, header, _scenario_records(measure))
    return path
