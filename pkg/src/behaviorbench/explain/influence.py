"""Scoring training records by their first-order effect on a measure.

Each collected timestep contributes one gradient step's worth of pull on
the policy. Projecting that pull onto the gradient of a behavior measure
says whether learning from the record moves the measure up or down.
Scores are first-order and single-round: they describe the update made
from the snapshot the records were collected under, nothing longer-term.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from behaviorbench.errors import ContractViolationError, ProvenanceError
from behaviorbench.measures.measure import BehaviorMeasure, gradient
from behaviorbench.policy.checkpoint import params_hash
from behaviorbench.policy.network import PolicySpec
from behaviorbench.training.ppo import ppo_loss_grad
from behaviorbench.training.records import RecordBatch, load_epoch_records

SIGN_CONVENTION = (
    "positive scores mark records whose gradient-descent step raises the measure"
)


@dataclass
class InfluenceReport:
    """Per-record influence scores for one epoch's record dump.

    A score is the inner product of the measure gradient with the descent
    direction of that record's loss, so its sign follows the documented
    convention and its magnitude scales linearly with both the measure
    and the step size.
    """

    measure_name: str
    epoch: int
    checkpoint_id: str
    record_epochs: np.ndarray
    record_timesteps: np.ndarray
    scores: np.ndarray

    def __post_init__(self) -> None:
        self.scores = np.asarray(self.scores, dtype=np.float64)
        self.record_epochs = np.asarray(self.record_epochs, dtype=np.int64)
        self.record_timesteps = np.asarray(self.record_timesteps, dtype=np.int64)
        if not (
            len(self.scores)
            == len(self.record_epochs)
            == len(self.record_timesteps)
        ):
            raise ContractViolationError("one score per record id required")
        if not np.all(np.isfinite(self.scores)):
            raise ContractViolationError("influence scores must be finite")

    def __len__(self) -> int:
        return len(self.scores)

    def top_k(self, k: int = 5) -> list[tuple[int, int, float]]:
        """(epoch, t, score) of the k largest-magnitude scores."""
        order = np.argsort(-np.abs(self.scores), kind="stable")[:k]
        return [
            (
                int(self.record_epochs[i]),
                int(self.record_timesteps[i]),
                float(self.scores[i]),
            )
            for i in order
        ]

    def to_dict(self) -> dict[str, Any]:
        return {
            "measure": self.measure_name,
            "epoch": self.epoch,
            "checkpoint": self.checkpoint_id,
            "sign_convention": SIGN_CONVENTION,
            "scores": [
                {"epoch": int(e), "t": int(t), "score": float(s)}
                for e, t, s in zip(
                    self.record_epochs, self.record_timesteps, self.scores
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
            writer.writerow(["epoch", "t", "score"])
            for e, t, s in zip(
                self.record_epochs, self.record_timesteps, self.scores
            ):
                writer.writerow([int(e), int(t), repr(float(s))])


def influence(
    records: RecordBatch | str | Path | tuple[RecordBatch, str, int],
    measure: BehaviorMeasure,
    params: np.ndarray,
    clip_eps: float = 0.2,
    value_coef: float = 0.5,
    entropy_coef: float = 0.01,
    spec: PolicySpec | None = None,
) -> InfluenceReport:
    """Score every record in an epoch dump against a measure.

    ``records`` may be a dump file path, the (batch, hash, epoch) triple
    a dump loads to, or a bare batch (no snapshot check possible). When
    the dump carries a collection snapshot hash, ``params`` must hash to
    it; scoring records against the wrong snapshot would silently produce
    first-order nonsense, so the mismatch is refused instead.

    Loss hyperparameters default to the trainer's defaults; pass the
    values the run actually used for step-faithful scores.
    """
    expected_hash = ""
    epoch = -1
    if isinstance(records, (str, Path)):
        batch, expected_hash, epoch = load_epoch_records(records)
    elif isinstance(records, tuple):
        batch, expected_hash, epoch = records
    else:
        batch = records
        if len(batch):
            epoch = int(batch.epochs[0])

    snapshot = params_hash(np.asarray(params, dtype=np.float64))
    if expected_hash and snapshot != expected_hash:
        raise ProvenanceError(
            f"records were collected under snapshot {expected_hash[:12]} but "
            f"scoring was requested at {snapshot[:12]}"
        )

    measure_grad = gradient(measure, params, spec)
    scores = np.empty(len(batch))
    for i in range(len(batch)):
        single = batch.subset(np.array([i]))
        _, record_grad, _ = ppo_loss_grad(
            params, single, clip_eps, value_coef, entropy_coef, spec
        )
        scores[i] = -float(measure_grad @ record_grad)

    return InfluenceReport(
        measure_name=measure.name,
        epoch=epoch,
        checkpoint_id=snapshot,
        record_epochs=batch.epochs.copy(),
        record_timesteps=batch.timesteps.copy(),
        scores=scores,
    )
