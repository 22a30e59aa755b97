"""Record batches: validation, views, and per-epoch dumps."""

from __future__ import annotations

import numpy as np
import pytest

from behaviorbench.errors import ContractViolationError
from behaviorbench.training.records import (
    RecordBatch,
    load_epoch_records,
    save_epoch_records,
)


def make_batch(n=8, seed=0):
    rng = np.random.default_rng(seed)
    return RecordBatch(
        observations=rng.uniform(-1, 1, size=(n, 25)),
        actions=rng.integers(0, 5, size=n),
        rewards=rng.normal(size=n),
        log_probs_old=-rng.uniform(1.0, 2.0, size=n),
        values_old=rng.normal(size=n),
        advantages=rng.normal(size=n),
        returns=rng.normal(size=n),
        epochs=np.repeat(np.arange(n // 4), 4)[:n],
        timesteps=np.tile(np.arange(4), n // 4 + 1)[:n],
    )


def test_lengths_must_agree():
    good = make_batch()
    with pytest.raises(ContractViolationError, match="length"):
        RecordBatch(
            good.observations,
            good.actions,
            good.rewards[:-1],
            good.log_probs_old,
            good.values_old,
            good.advantages,
            good.returns,
            good.epochs,
            good.timesteps,
        )


def test_non_finite_advantages_are_rejected():
    good = make_batch()
    bad = good.advantages.copy()
    bad[0] = np.nan
    with pytest.raises(ContractViolationError, match="finite"):
        RecordBatch(
            good.observations,
            good.actions,
            good.rewards,
            good.log_probs_old,
            good.values_old,
            bad,
            good.returns,
            good.epochs,
            good.timesteps,
        )


def test_observations_are_flattened_per_row():
    rng = np.random.default_rng(1)
    batch = RecordBatch(
        observations=rng.uniform(size=(3, 5, 5)),
        actions=[0, 1, 2],
        rewards=[0.0] * 3,
        log_probs_old=[-1.0] * 3,
        values_old=[0.0] * 3,
        advantages=[0.0] * 3,
        returns=[0.0] * 3,
        epochs=[0] * 3,
        timesteps=[0, 1, 2],
    )
    assert batch.observations.shape == (3, 25)


def test_subset_and_record_views():
    batch = make_batch()
    sub = batch.subset(np.array([2, 5]))
    assert len(sub) == 2
    np.testing.assert_array_equal(sub.actions, batch.actions[[2, 5]])
    rec = batch.record(3)
    assert rec.action == batch.actions[3]
    assert rec.advantage == batch.advantages[3]
    assert rec.observation.shape == (25,)


def test_epoch_dump_round_trip(tmp_path):
    batch = make_batch(12, seed=3)
    path = tmp_path / "epoch_0004.npz"
    save_epoch_records(path, batch, params_hash="cafe" * 16, epoch=4)
    loaded, digest, epoch = load_epoch_records(path)
    assert digest == "cafe" * 16
    assert epoch == 4
    for name in (
        "observations",
        "actions",
        "rewards",
        "log_probs_old",
        "values_old",
        "advantages",
        "returns",
        "epochs",
        "timesteps",
    ):
        np.testing.assert_array_equal(getattr(loaded, name), getattr(batch, name))
