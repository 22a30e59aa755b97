"""Training loop artifacts: layout, determinism, pairing, divergence."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np
import pytest

import behaviorbench.training.trainer as trainer_mod
from behaviorbench.env.archive import read_rollout_archive
from behaviorbench.env.config import EnvConfig
from behaviorbench.errors import ConfigurationError, TrainingDivergedError
from behaviorbench.measures import collision_measure_fixture
from behaviorbench.measures.measure import evaluate
from behaviorbench.policy.checkpoint import load_checkpoint
from behaviorbench.training.records import load_epoch_records
from behaviorbench.training.trainer import (
    METRIC_COLUMNS,
    TrainerConfig,
    default_run_root,
    train,
)

SMALL_ENV = EnvConfig(npc_count=8, horizon=20)


def small_config(**overrides):
    base = dict(
        batch_size=60,
        minibatch_size=30,
        inner_epochs=2,
        total_timesteps=180,
        env=SMALL_ENV,
    )
    base.update(overrides)
    return TrainerConfig(**base)


def _read_metrics(run_dir):
    with (Path(run_dir) / "metrics.csv").open(newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def shared_run(tmp_path_factory):
    run_dir = tmp_path_factory.mktemp("runs") / "shared"
    train(
        small_config(),
        seed=101,
        measures={"collision": collision_measure_fixture()},
        run_dir=run_dir,
    )
    return run_dir


def test_run_directory_layout(shared_run):
    assert (shared_run / "metrics.csv").is_file()
    assert (shared_run / "manifest.json").is_file()
    for epoch in range(4):
        assert (shared_run / "checkpoints" / f"epoch_{epoch:04d}.ckpt").is_file()
    for epoch in range(1, 4):
        assert (shared_run / "records" / f"epoch_{epoch:04d}.npz").is_file()
        assert (shared_run / "rollouts" / f"epoch_{epoch:04d}.jsonl").is_file()


def test_metrics_csv_columns_and_rows(shared_run):
    rows = _read_metrics(shared_run)
    assert list(rows[0].keys()) == list(METRIC_COLUMNS) + ["collision"]
    assert [int(r["epoch"]) for r in rows] == [1, 2, 3]
    assert [int(r["timesteps"]) for r in rows] == [60, 120, 180]
    for row in rows:
        assert 0.0 <= float(row["survival"]) <= 1.0
        assert np.isfinite(float(row["mean_norm_return"]))


def test_records_carry_the_pre_update_snapshot_hash(shared_run):
    # the records of epoch N were collected under the params saved as
    # checkpoint N-1; the post-update params become checkpoint N
    for epoch in range(1, 4):
        _, digest, got_epoch = load_epoch_records(
            shared_run / "records" / f"epoch_{epoch:04d}.npz"
        )
        assert got_epoch == epoch
        prev = load_checkpoint(
            shared_run / "checkpoints" / f"epoch_{epoch - 1:04d}.ckpt"
        )
        assert digest == prev.checkpoint_id


def test_rollout_archives_reference_the_collection_policy(shared_run):
    header, records = read_rollout_archive(
        shared_run / "rollouts" / "epoch_0002.jsonl"
    )
    assert header.config_hash == SMALL_ENV.config_hash()
    assert header.seed == 101
    ckpt = load_checkpoint(shared_run / "checkpoints" / "epoch_0001.ckpt")
    assert header.checkpoint == ckpt.checkpoint_id
    assert len(records) == 60
    assert [r.t for r in records] == list(range(60))
    assert all(r.epoch == 2 for r in records)


def test_measure_column_reproducible_from_checkpoints(shared_run):
    fixture = collision_measure_fixture()
    for row in _read_metrics(shared_run):
        ckpt = load_checkpoint(
            shared_run / "checkpoints" / f"epoch_{int(row['epoch']):04d}.ckpt"
        )
        assert float(row["collision"]) == evaluate(fixture, ckpt.params, ckpt.spec)


def test_manifest_verifies_after_training(shared_run):
    from behaviorbench.manifest import load_manifest, verify_manifest

    verified = verify_manifest(shared_run)
    assert "metrics.csv" in verified
    assert len(verified) == 1 + 4 * 2 + 3 + 3  # metrics, ckpts+sidecars, npz, jsonl
    manifest = load_manifest(shared_run)
    assert manifest["seed"] == 101
    assert len(manifest["checkpoints"]) == 4


def test_identical_runs_are_byte_identical(tmp_path):
    config = small_config(total_timesteps=120)
    a = train(config, seed=77, run_dir=tmp_path / "a")
    b = train(config, seed=77, run_dir=tmp_path / "b")
    files_a = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
    files_b = sorted(p.relative_to(b) for p in b.rglob("*") if p.is_file())
    assert files_a == files_b
    for rel in files_a:
        assert (a / rel).read_bytes() == (b / rel).read_bytes(), rel


def test_different_seeds_diverge(tmp_path):
    config = small_config(total_timesteps=60)
    a = train(config, seed=1, run_dir=tmp_path / "a")
    b = train(config, seed=2, run_dir=tmp_path / "b")
    pa = load_checkpoint(a / "checkpoints" / "epoch_0001.ckpt").params
    pb = load_checkpoint(b / "checkpoints" / "epoch_0001.ckpt").params
    assert not np.array_equal(pa, pb)


def test_zero_learning_rate_keeps_parameters_frozen(tmp_path):
    config = small_config(learning_rate=0.0, optimizer="sgd")
    run_dir = train(config, seed=9, run_dir=tmp_path / "flat")
    ids = set()
    for epoch in range(4):
        ckpt = load_checkpoint(run_dir / "checkpoints" / f"epoch_{epoch:04d}.ckpt")
        ids.add(ckpt.checkpoint_id)
    assert len(ids) == 1


def test_tight_kl_budget_limits_the_update(tmp_path):
    loose = train(
        small_config(total_timesteps=60, optimizer="sgd", learning_rate=0.01,
                     kl_budget=10.0),
        seed=13,
        run_dir=tmp_path / "loose",
    )
    tight = train(
        small_config(total_timesteps=60, optimizer="sgd", learning_rate=0.01,
                     kl_budget=1e-6),
        seed=13,
        run_dir=tmp_path / "tight",
    )
    start = load_checkpoint(loose / "checkpoints" / "epoch_0000.ckpt").params
    moved_loose = np.linalg.norm(
        load_checkpoint(loose / "checkpoints" / "epoch_0001.ckpt").params - start
    )
    moved_tight = np.linalg.norm(
        load_checkpoint(tight / "checkpoints" / "epoch_0001.ckpt").params - start
    )
    assert moved_tight < moved_loose
    assert moved_tight > 0.0  # the stop triggers after the first step, not before


def test_divergence_writes_diagnostics_then_raises(tmp_path, monkeypatch):
    def explode(params, batch, *args, **kwargs):
        return float("nan"), np.zeros_like(params), {"loss": float("nan")}

    monkeypatch.setattr(trainer_mod, "ppo_loss_grad", explode)
    with pytest.raises(TrainingDivergedError, match="epoch 1"):
        train(small_config(total_timesteps=60), seed=3, run_dir=tmp_path / "boom")
    diag = json.loads((tmp_path / "boom" / "diagnostics.json").read_text())
    assert diag["epoch"] == 1
    assert "params_hash" in diag


def test_rollout_archiving_can_be_disabled(tmp_path):
    config = small_config(total_timesteps=60, archive_rollouts=False)
    run_dir = train(config, seed=4, run_dir=tmp_path / "noarch")
    assert not (run_dir / "rollouts").exists()
    manifest = json.loads((run_dir / "manifest.json").read_text())
    assert all("rollouts" not in e["path"] for e in manifest["artifacts"])


def test_config_validation():
    with pytest.raises(ConfigurationError):
        TrainerConfig(optimizer="rmsprop")
    with pytest.raises(ConfigurationError):
        TrainerConfig(minibatch_size=4096, batch_size=2048)
    with pytest.raises(ConfigurationError):
        TrainerConfig(total_timesteps=100, batch_size=2048)
    with pytest.raises(ConfigurationError):
        TrainerConfig(kl_budget=0.0)


def test_unsafe_measure_names_are_rejected(tmp_path):
    with pytest.raises(ConfigurationError, match="measure name"):
        train(
            small_config(total_timesteps=60),
            seed=5,
            measures={"bad,name": collision_measure_fixture()},
            run_dir=tmp_path / "x",
        )


def test_config_round_trips_through_dict():
    config = small_config(optimizer="sgd", learning_rate=0.01)
    assert TrainerConfig.from_dict(config.to_dict()) == config


def test_default_run_root_honors_environment(monkeypatch):
    monkeypatch.setenv("BEHAVIORBENCH_RUNS", "/tmp/some/where")
    assert default_run_root() == Path("/tmp/some/where")
    monkeypatch.delenv("BEHAVIORBENCH_RUNS")
    assert default_run_root() == Path("runs")
