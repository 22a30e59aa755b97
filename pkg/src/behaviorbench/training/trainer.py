"""On-policy PPO training loop over the highway environment.

Each epoch collects a fixed batch of timesteps from one persistent
environment stream, runs clipped-surrogate updates with a KL early stop,
then logs metrics, a checkpoint, a record dump, and (optionally) a rollout
archive. Everything derives from the run seed; no artifact contains a
timestamp, so reruns are byte-identical.
"""

from __future__ import annotations

import csv
import json
import os
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from behaviorbench import manifest as manifest_mod
from behaviorbench.env import (
    Action,
    ArchiveHeader,
    EnvConfig,
    RolloutRecord,
    reset,
    step,
    write_rollout_archive,
)
from behaviorbench.errors import ConfigurationError, TrainingDivergedError
from behaviorbench.measures.measure import BehaviorMeasure, evaluate
from behaviorbench.policy.checkpoint import params_hash, save_checkpoint
from behaviorbench.policy.network import PolicySpec, forward_batch, init_params
from behaviorbench.training.gae import compute_gae
from behaviorbench.training.ppo import ppo_loss_grad
from behaviorbench.training.records import RecordBatch, save_epoch_records

_MEASURE_NAME = re.compile(r"^[A-Za-z0-9_.-]+$")
METRIC_COLUMNS = (
    "epoch",
    "timesteps",
    "mean_norm_return",
    "survival",
    "collision_comp",
    "speed_comp",
    "lane_comp",
    "kl",
)


@dataclass(frozen=True)
class TrainerConfig:
    """Hyperparameters of the training loop.

    Args:
        gamma: Discount factor.
        lam: Advantage-estimation decay.
        clip_eps: PPO ratio clip width.
        learning_rate: Optimizer step size.
        batch_size: Timesteps collected per epoch.
        inner_epochs: Passes over the batch per update phase.
        minibatch_size: Records per gradient step.
        entropy_coef: Entropy bonus weight.
        value_coef: Value-error weight.
        optimizer: "adam" or "sgd"; the sgd mode exists so first-order
            attribution of single updates is exact.
        kl_budget: Update phase stops early once the mean divergence from
            the collection policy exceeds this.
        total_timesteps: Environment steps over the whole run, rounded
            down to whole epochs.
    """

    gamma: float = 0.99
    lam: float = 0.95
    clip_eps: float = 0.2
    learning_rate: float = 3e-4
    batch_size: int = 2048
    inner_epochs: int = 4
    minibatch_size: int = 256
    entropy_coef: float = 0.01
    value_coef: float = 0.5
    optimizer: str = "adam"
    kl_budget: float = 0.01
    total_timesteps: int = 200_000
    env: EnvConfig = field(default_factory=EnvConfig)
    policy: PolicySpec = field(default_factory=PolicySpec)
    archive_rollouts: bool = True

    def __post_init__(self) -> None:
        if not (0.0 < self.gamma <= 1.0) or not (0.0 < self.lam <= 1.0):
            raise ConfigurationError("gamma and lam must lie in (0, 1]")
        if self.clip_eps <= 0:
            raise ConfigurationError("clip_eps must be positive")
        if self.learning_rate < 0:
            raise ConfigurationError("learning_rate must be non-negative")
        if self.batch_size < 1 or self.minibatch_size < 1:
            raise ConfigurationError("batch and minibatch sizes must be positive")
        if self.minibatch_size > self.batch_size:
            raise ConfigurationError("minibatch_size cannot exceed batch_size")
        if self.inner_epochs < 1:
            raise ConfigurationError("inner_epochs must be at least 1")
        if self.optimizer not in ("adam", "sgd"):
            raise ConfigurationError("optimizer must be 'adam' or 'sgd'")
        if self.kl_budget <= 0:
            raise ConfigurationError("kl_budget must be positive")
        if self.total_timesteps < self.batch_size:
            raise ConfigurationError("total_timesteps must cover at least one epoch")

    def to_dict(self) -> dict:
        out = {
            k: getattr(self, k)
            for k in (
                "gamma",
                "lam",
                "clip_eps",
                "learning_rate",
                "batch_size",
                "inner_epochs",
                "minibatch_size",
                "entropy_coef",
                "value_coef",
                "optimizer",
                "kl_budget",
                "total_timesteps",
                "archive_rollouts",
            )
        }
        out["env"] = self.env.to_dict()
        out["policy"] = self.policy.to_dict()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "TrainerConfig":
        kwargs = dict(data)
        if "env" in kwargs:
            kwargs["env"] = EnvConfig.from_dict(kwargs["env"])
        if "policy" in kwargs:
            kwargs["policy"] = PolicySpec.from_dict(kwargs["policy"])
        return cls(**kwargs)


@dataclass
class EpochMetrics:
    """Per-epoch training statistics.

    Return and component fields average over episodes that finished during
    the epoch; the reward components are raw (un-normalized) sums, so they
    recombine to the mean raw return.
    """

    epoch: int
    timesteps: int
    mean_norm_return: float
    survival: float
    collision_comp: float
    speed_comp: float
    lane_comp: float
    kl: float
    measures: dict[str, float] = field(default_factory=dict)

    def row(self, measure_names: list[str]) -> list:
        return [
            self.epoch,
            self.timesteps,
            self.mean_norm_return,
            self.survival,
            self.collision_comp,
            self.speed_comp,
            self.lane_comp,
            self.kl,
        ] + [self.measures[name] for name in measure_names]


class _Adam:
    def __init__(self, n: int, lr: float) -> None:
        self.lr = lr
        self.beta1 = 0.9
        self.beta2 = 0.999
        self.eps = 1e-8
        self.m = np.zeros(n)
        self.v = np.zeros(n)
        self.t = 0

    def step(self, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
        self.t += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grad * grad
        m_hat = self.m / (1.0 - self.beta1**self.t)
        v_hat = self.v / (1.0 - self.beta2**self.t)
        return params - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


class _Sgd:
    def __init__(self, lr: float) -> None:
        self.lr = lr

    def step(self, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
        return params - self.lr * grad


class _EpisodeStats:
    """Accumulates per-episode sums; reports over episodes finished in an epoch.

    If no episode finished yet (very short epochs), the running partial
    episode is reported instead so metrics stay defined.
    """

    def __init__(self) -> None:
        self.partial = np.zeros(4)  # norm sum, collision, speed, lane
        self.partial_steps = 0
        self.finished: list[tuple[np.ndarray, bool]] = []

    def add_step(self, reward) -> None:
        self.partial += (
            reward.normalized,
            reward.collision_term,
            reward.speed_term,
            reward.lane_term,
        )
        self.partial_steps += 1

    def finish_episode(self, collided: bool) -> None:
        self.finished.append((self.partial.copy(), collided))
        self.partial[:] = 0.0
        self.partial_steps = 0

    def summarize(self) -> tuple[float, float, float, float, float]:
        if self.finished:
            sums = np.stack([s for s, _ in self.finished])
            survival = 1.0 - sum(c for _, c in self.finished) / len(self.finished)
        else:
            sums = self.partial[None, :]
            survival = 1.0
        mean = sums.mean(axis=0)
        self.finished = []
        return float(mean[0]), survival, float(mean[1]), float(mean[2]), float(mean[3])


def _kl_divergence(old_log_probs: np.ndarray, new_log_probs: np.ndarray) -> float:
    """Mean exact divergence of the new policy from the old, per state."""
    p_old = np.exp(old_log_probs)
    return float((p_old * (old_log_probs - new_log_probs)).sum(axis=1).mean())


def default_run_root() -> Path:
    return Path(os.environ.get("BEHAVIORBENCH_RUNS", "runs"))


def train(
    config: TrainerConfig,
    seed: int,
    measures: dict[str, BehaviorMeasure] | None = None,
    run_dir: str | Path | None = None,
) -> Path:
    """Run PPO and return the run directory.

    The directory contains metrics.csv, per-epoch checkpoints and record
    dumps, optional rollout archives, and a manifest hashing all of them.
    Raises TrainingDivergedError (after writing diagnostics.json) if the
    loss goes non-finite.
    """
    measures = dict(measures or {})
    for name in measures:
        if not _MEASURE_NAME.match(name):
            raise ConfigurationError(f"measure name {name!r} not filesystem/CSV safe")
    measure_names = sorted(measures)

    if run_dir is None:
        run_dir = default_run_root() / f"run-seed{seed}"
    run_dir = Path(run_dir)
    (run_dir / "checkpoints").mkdir(parents=True, exist_ok=True)
    (run_dir / "records").mkdir(exist_ok=True)
    if config.archive_rollouts:
        (run_dir / "rollouts").mkdir(exist_ok=True)

    root_ss = np.random.SeedSequence(seed)
    init_ss, action_ss, reset_ss, shuffle_ss = root_ss.spawn(4)
    params = init_params(config.policy, seed=int(init_ss.generate_state(1)[0]))
    action_rng = np.random.default_rng(action_ss)
    reset_rng = np.random.default_rng(reset_ss)
    shuffle_rng = np.random.default_rng(shuffle_ss)

    optimizer = (
        _Adam(params.size, config.learning_rate)
        if config.optimizer == "adam"
        else _Sgd(config.learning_rate)
    )

    env_hash = config.env.config_hash()
    epochs = config.total_timesteps // config.batch_size
    stats = _EpisodeStats()
    state = None
    obs = None

    checkpoints: list[dict] = []
    initial_id = save_checkpoint(
        run_dir / "checkpoints" / "epoch_0000.ckpt",
        params,
        config.policy,
        seed=seed,
        step=0,
    )
    checkpoints.append({"epoch": 0, "step": 0, "id": initial_id})

    metrics_path = run_dir / "metrics.csv"
    with metrics_path.open("w", newline="", encoding="utf-8") as metrics_file:
        writer = csv.writer(metrics_file, lineterminator="\n")
        writer.writerow(list(METRIC_COLUMNS) + measure_names)

        for epoch in range(1, epochs + 1):
            collect_params = params
            collect_hash = params_hash(collect_params)
            n = config.batch_size
            obs_buf = np.empty((n, config.policy.obs_dim))
            act_buf = np.empty(n, dtype=np.int64)
            rew_buf = np.empty(n)
            logp_buf = np.empty(n)
            val_buf = np.empty(n)
            done_buf = np.zeros(n)
            rollout_records: list[RolloutRecord] = []

            for t in range(n):
                if state is None or state.done:
                    state, obs = reset(int(reset_rng.integers(2**63)), config.env)
                flat = obs.reshape(-1)
                probs, log_probs, values = forward_batch(
                    collect_params, flat[None, :], config.policy
                )
                u = action_rng.random()
                action = int(
                    min(np.searchsorted(np.cumsum(probs[0]), u, side="right"), 4)
                )
                state, obs, reward, done = step(state, Action(action))

                obs_buf[t] = flat
                act_buf[t] = action
                rew_buf[t] = reward.normalized
                logp_buf[t] = log_probs[0, action]
                val_buf[t] = values[0]
                done_buf[t] = float(done)
                stats.add_step(reward)
                if done:
                    stats.finish_episode(state.collided)
                if config.archive_rollouts:
                    rollout_records.append(
                        RolloutRecord(
                            epoch=epoch,
                            t=t,
                            observation=obs_buf[t],
                            action=action,
                            reward=reward,
                            done=done,
                        )
                    )

            if state.done:
                last_value = 0.0
            else:
                last_value = float(
                    forward_batch(
                        collect_params, obs.reshape(1, -1), config.policy
                    )[2][0]
                )
            advantages, returns = compute_gae(
                rew_buf, val_buf, done_buf, config.gamma, config.lam, last_value
            )
            batch = RecordBatch(
                obs_buf,
                act_buf,
                rew_buf,
                logp_buf,
                val_buf,
                advantages,
                returns,
                np.full(n, epoch, dtype=np.int64),
                np.arange(n, dtype=np.int64),
            )
            save_epoch_records(
                run_dir / "records" / f"epoch_{epoch:04d}.npz",
                batch,
                collect_hash,
                epoch,
            )
            if config.archive_rollouts:
                write_rollout_archive(
                    run_dir / "rollouts" / f"epoch_{epoch:04d}.jsonl",
                    ArchiveHeader(
                        config_hash=env_hash, seed=seed, checkpoint=collect_hash
                    ),
                    rollout_records,
                )

            old_log_probs = forward_batch(collect_params, obs_buf, config.policy)[1]
            kl = 0.0
            stop = False
            for inner in range(config.inner_epochs):
                perm = shuffle_rng.permutation(n)
                for start in range(0, n, config.minibatch_size):
                    idx = perm[start : start + config.minibatch_size]
                    mb = batch.subset(idx)
                    adv = mb.advantages
                    mb.advantages = (adv - adv.mean()) / (adv.std() + 1e-8)
                    loss, grad, parts = ppo_loss_grad(
                        params,
                        mb,
                        config.clip_eps,
                        config.value_coef,
                        config.entropy_coef,
                        config.policy,
                    )
                    if not np.isfinite(loss) or not np.all(np.isfinite(grad)):
                        _dump_diagnostics(
                            run_dir, epoch, inner, start, parts, params, grad
                        )
                        raise TrainingDivergedError(
                            f"non-finite loss at epoch {epoch}"
                        )
                    params = optimizer.step(params, grad)
                    new_log_probs = forward_batch(params, obs_buf, config.policy)[1]
                    kl = _kl_divergence(old_log_probs, new_log_probs)
                    if kl > config.kl_budget:
                        stop = True
                        break
                if stop:
                    break

            timesteps = epoch * config.batch_size
            ckpt_id = save_checkpoint(
                run_dir / "checkpoints" / f"epoch_{epoch:04d}.ckpt",
                params,
                config.policy,
                seed=seed,
                step=timesteps,
            )
            checkpoints.append({"epoch": epoch, "step": timesteps, "id": ckpt_id})

            mean_norm, survival, coll, speed, lane = stats.summarize()
            metric = EpochMetrics(
                epoch=epoch,
                timesteps=timesteps,
                mean_norm_return=mean_norm,
                survival=survival,
                collision_comp=coll,
                speed_comp=speed,
                lane_comp=lane,
                kl=kl,
                measures={
                    name: evaluate(measures[name], params, config.policy)
                    for name in measure_names
                },
            )
            writer.writerow(metric.row(measure_names))
            metrics_file.flush()

    artifacts = ["metrics.csv"]
    for sub in ("checkpoints", "records", "rollouts"):
        folder = run_dir / sub
        if folder.exists():
            artifacts += [
                str(p.relative_to(run_dir)) for p in sorted(folder.iterdir())
            ]
    manifest_mod.write_manifest(
        run_dir,
        config=config.to_dict(),
        seed=seed,
        checkpoints=checkpoints,
        artifacts=artifacts,
    )
    return run_dir


def _dump_diagnostics(
    run_dir: Path,
    epoch: int,
    inner: int,
    offset: int,
    parts: dict,
    params: np.ndarray,
    grad: np.ndarray,
) -> None:
    payload = {
        "epoch": epoch,
        "inner_epoch": inner,
        "minibatch_offset": offset,
        "loss_parts": {k: float(v) for k, v in parts.items() if np.isscalar(v)},
        "param_norm": float(np.linalg.norm(params)),
        "grad_finite": bool(np.all(np.isfinite(grad))),
        "params_hash": params_hash(params),
    }
    (run_dir / "diagnostics.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
