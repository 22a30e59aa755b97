"""Training records and their per-epoch persistence.

Each epoch's records are dumped so attribution can run after the fact;
the dump carries the hash of the parameter snapshot the records were
collected under, which influence scoring verifies before trusting them.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from behaviorbench.errors import ContractViolationError


@dataclass
class TrainingRecord:
    """One collected timestep as the PPO update and the explainers see it."""

    observation: np.ndarray
    action: int
    reward: float
    log_prob_old: float
    value_old: float
    advantage: float
    return_to_go: float
    epoch: int
    timestep: int


class RecordBatch:
    """Column-oriented view over training records.

    Advantages are stored raw; any normalization happens in the update
    loop so record dumps stay faithful to collection.
    """

    def __init__(
        self,
        observations: np.ndarray,
        actions: np.ndarray,
        rewards: np.ndarray,
        log_probs_old: np.ndarray,
        values_old: np.ndarray,
        advantages: np.ndarray,
        returns: np.ndarray,
        epochs: np.ndarray,
        timesteps: np.ndarray,
    ) -> None:
        n = len(actions)
        fields = dict(
            observations=np.asarray(observations, dtype=np.float64).reshape(n, -1),
            actions=np.asarray(actions, dtype=np.int64),
            rewards=np.asarray(rewards, dtype=np.float64),
            log_probs_old=np.asarray(log_probs_old, dtype=np.float64),
            values_old=np.asarray(values_old, dtype=np.float64),
            advantages=np.asarray(advantages, dtype=np.float64),
            returns=np.asarray(returns, dtype=np.float64),
            epochs=np.asarray(epochs, dtype=np.int64),
            timesteps=np.asarray(timesteps, dtype=np.int64),
        )
        for name, arr in fields.items():
            if len(arr) != n:
                raise ContractViolationError(f"field {name} has length {len(arr)} != {n}")
            setattr(self, name, arr)
        if not np.all(np.isfinite(self.advantages)):
            raise ContractViolationError("advantages must be finite")

    def __len__(self) -> int:
        return len(self.actions)

    def subset(self, idx) -> "RecordBatch":
        return RecordBatch(
            self.observations[idx],
            self.actions[idx],
            self.rewards[idx],
            self.log_probs_old[idx],
            self.values_old[idx],
            self.advantages[idx],
            self.returns[idx],
            self.epochs[idx],
            self.timesteps[idx],
        )

    def record(self, i: int) -> TrainingRecord:
        return TrainingRecord(
            observation=self.observations[i].copy(),
            action=int(self.actions[i]),
            reward=float(self.rewards[i]),
            log_prob_old=float(self.log_probs_old[i]),
            value_old=float(self.values_old[i]),
            advantage=float(self.advantages[i]),
            return_to_go=float(self.returns[i]),
            epoch=int(self.epochs[i]),
            timestep=int(self.timesteps[i]),
        )


def save_epoch_records(
    path: str | Path, batch: RecordBatch, params_hash: str, epoch: int
) -> None:
    np.savez_compressed(
        Path(path),
        observations=batch.observations,
        actions=batch.actions,
        rewards=batch.rewards,
        log_probs_old=batch.log_probs_old,
        values_old=batch.values_old,
        advantages=batch.advantages,
        returns=batch.returns,
        epochs=batch.epochs,
        timesteps=batch.timesteps,
        params_hash=np.array(params_hash),
        epoch=np.array(epoch),
    )


def load_epoch_records(path: str | Path) -> tuple[RecordBatch, str, int]:
    """Returns (records, collection params hash, epoch index)."""
    with np.load(Path(path)) as data:
        batch = RecordBatch(
            data["observations"],
            data["actions"],
            data["rewards"],
            data["log_probs_old"],
            data["values_old"],
            data["advantages"],
            data["returns"],
            data["epochs"],
            data["timesteps"],
        )
        return batch, str(data["params_hash"]), int(data["epoch"])
