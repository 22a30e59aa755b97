"""Line-delimited JSON archives of policy rollouts.

An archive is a text file whose first line is a header object and whose
remaining lines are one record per environment step. Field order is fixed:

    header: format, version, config_hash, seed, checkpoint
    record: epoch, t, obs, action, reward, done

``obs`` is the 5x5 observation flattened row-major to 25 floats, ``action``
is the integer action id, and ``reward`` is the full reward breakdown.
Files contain no timestamps, so identical runs produce identical bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from behaviorbench.env.types import RewardBreakdown

ARCHIVE_FORMAT = "behaviorbench-rollouts"
ARCHIVE_VERSION = 1


@dataclass
class ArchiveHeader:
    """Provenance of a rollout archive.

    Args:
        config_hash: Hash of the environment config the rollouts used.
        seed: Base seed of the run that produced the rollouts.
        checkpoint: Identifier of the policy checkpoint, empty when the
            policy was not checkpointed.
    """

    config_hash: str
    seed: int
    checkpoint: str = ""
    format: str = ARCHIVE_FORMAT
    version: int = ARCHIVE_VERSION

    def to_json(self) -> str:
        return json.dumps(
            {
                "format": self.format,
                "version": self.version,
                "config_hash": self.config_hash,
                "seed": self.seed,
                "checkpoint": self.checkpoint,
            }
        )

    @classmethod
    def from_json(cls, line: str) -> "ArchiveHeader":
        data = json.loads(line)
        if data.get("format") != ARCHIVE_FORMAT:
            raise ValueError(f"not a rollout archive: format={data.get('format')!r}")
        if data.get("version") != ARCHIVE_VERSION:
            raise ValueError(f"unsupported archive version {data.get('version')!r}")
        return cls(
            config_hash=str(data["config_hash"]),
            seed=int(data["seed"]),
            checkpoint=str(data.get("checkpoint", "")),
        )


@dataclass
class RolloutRecord:
    """One environment step as stored in an archive."""

    epoch: int
    t: int
    observation: np.ndarray
    action: int
    reward: RewardBreakdown
    done: bool

    def to_json(self) -> str:
        return json.dumps(
            {
                "epoch": self.epoch,
                "t": self.t,
                "obs": np.asarray(self.observation).reshape(-1).tolist(),
                "action": int(self.action),
                "reward": self.reward.to_dict(),
                "done": self.done,
            }
        )

    @classmethod
    def from_json(cls, line: str) -> "RolloutRecord":
        data = json.loads(line)
        obs = np.asarray(data["obs"], dtype=np.float64).reshape(5, 5)
        return cls(
            epoch=int(data["epoch"]),
            t=int(data["t"]),
            observation=obs,
            action=int(data["action"]),
            reward=RewardBreakdown.from_dict(data["reward"]),
            done=bool(data["done"]),
        )


def write_rollout_archive(
    path: str | Path,
    header: ArchiveHeader,
    records: Iterable[RolloutRecord],
) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(header.to_json() + "\n")
        for record in records:
            fh.write(record.to_json() + "\n")


def iter_rollout_archive(
    path: str | Path,
) -> Iterator[ArchiveHeader | RolloutRecord]:
    """Yield the header followed by each record, without loading the file."""
    with Path(path).open("r", encoding="utf-8") as fh:
        first = fh.readline()
        if not first.strip():
            raise ValueError(f"empty archive: {path}")
        yield ArchiveHeader.from_json(first)
        for number, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            try:
                yield RolloutRecord.from_json(line)
            except (KeyError, ValueError, json.JSONDecodeError) as exc:
                raise ValueError(f"bad record at line {number} of {path}: {exc}") from exc


def read_rollout_archive(
    path: str | Path,
) -> tuple[ArchiveHeader, list[RolloutRecord]]:
    stream = iter_rollout_archive(path)
    header = next(stream)
    assert isinstance(header, ArchiveHeader)
    return header, list(stream)  # type: ignore[arg-type]
