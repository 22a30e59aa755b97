"""Command-line interface: train, rollout, measure, explain, report.

Every command is deterministic given its flags and seed. Exit codes: 0 on
success, 2 for usage errors (argparse), 1 for runtime failures.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from behaviorbench.env import (
    Action,
    ArchiveHeader,
    EnvConfig,
    RolloutRecord,
    iter_rollout_archive,
    reset,
    step,
    write_rollout_archive,
)
from behaviorbench.errors import BehaviorBenchError
from behaviorbench.explain import (
    behavior_shapley,
    counterfactual,
    influence,
    toy_chain,
)
from behaviorbench.measures import (
    BehaviorMeasure,
    collision_measure_fixture,
    evaluate,
    evaluation_report,
    load_measure,
)
from behaviorbench.policy.checkpoint import load_checkpoint, save_checkpoint
from behaviorbench.policy.network import forward_batch
from behaviorbench.training.trainer import TrainerConfig, default_run_root, train

OBS_ROW_GROUPS = [[row * 5 + col for col in range(5)] for row in range(5)]
OBS_ROW_NAMES = ["ego", "npc1", "npc2", "npc3", "npc4"]


def _positive_int(text: str) -> int:
    value = int(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _nonneg_float(text: str) -> float:
    value = float(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative number, got {text}")
    return value


def _measure_observations(measure: BehaviorMeasure) -> np.ndarray:
    """All observations a measure reads, stacked as (rows, 25)."""
    if measure.form == "mean_action_prob":
        obs = measure.scenarios.observations()
        return obs.reshape(obs.shape[0], -1)
    if measure.form == "observation_contrast":
        return np.stack(
            [measure.observation_p.reshape(-1), measure.observation_q.reshape(-1)]
        )
    if measure.form == "action_contrast":
        return measure.observation.reshape(1, -1)
    return np.vstack([_measure_observations(child) for child in measure.children])


def _load_measure_arg(path: str | None) -> BehaviorMeasure:
    if path is None:
        return collision_measure_fixture()
    return load_measure(path)


def _load_observations(path: str, limit: int = 512) -> np.ndarray:
    """Observations from an archive (.jsonl) or a measure/scenario file."""
    p = Path(path)
    if p.suffix == ".jsonl":
        rows = []
        stream = iter_rollout_archive(p)
        next(stream)
        for record in stream:
            rows.append(np.asarray(record.observation).reshape(-1))
            if len(rows) >= limit:
                break
        if not rows:
            raise BehaviorBenchError(f"{path} contains no records")
        return np.stack(rows)
    return _measure_observations(load_measure(p))


def _parse_groups(text: str) -> tuple[list[list[int]], list[str] | None]:
    if text == "rows":
        return OBS_ROW_GROUPS, list(OBS_ROW_NAMES)
    if text == "features":
        return [[i] for i in range(25)], None
    groups = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if chunk:
            groups.append([int(i) for i in chunk.split(",")])
    if not groups:
        raise BehaviorBenchError(f"no feature groups in {text!r}")
    return groups, None


def cmd_train(args: argparse.Namespace) -> int:
    measures: dict[str, BehaviorMeasure] = {}
    for path in args.measure or []:
        measure = load_measure(path)
        if measure.name in measures:
            raise BehaviorBenchError(f"duplicate measure name {measure.name!r}")
        measures[measure.name] = measure

    config = TrainerConfig(
        gamma=args.gamma,
        lam=args.lam,
        clip_eps=args.clip_eps,
        learning_rate=args.lr,
        batch_size=args.batch_size,
        inner_epochs=args.inner_epochs,
        minibatch_size=args.minibatch_size,
        entropy_coef=args.entropy_coef,
        value_coef=args.value_coef,
        optimizer=args.optimizer,
        kl_budget=args.kl_budget,
        total_timesteps=args.timesteps,
        archive_rollouts=not args.no_rollouts,
    )
    run_dir = Path(args.out) if args.out else default_run_root() / f"run-seed{args.seed}"
    try:
        run_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise BehaviorBenchError(f"cannot create run directory {run_dir}: {exc}")
    train(config, seed=args.seed, measures=measures, run_dir=run_dir)
    print(run_dir)
    return 0


def cmd_rollout(args: argparse.Namespace) -> int:
    env_config = EnvConfig()
    checkpoint_id = ""
    params = None
    spec = None
    if args.checkpoint:
        ckpt = load_checkpoint(args.checkpoint)
        params, spec, checkpoint_id = ckpt.params, ckpt.spec, ckpt.checkpoint_id

    root = np.random.SeedSequence(args.seed)
    action_ss, reset_ss = root.spawn(2)
    action_rng = np.random.default_rng(action_ss)
    reset_rng = np.random.default_rng(reset_ss)

    records: list[RolloutRecord] = []
    survived = 0
    for episode in range(args.episodes):
        state, obs = reset(int(reset_rng.integers(2**63)), env_config)
        t = 0
        while not state.done:
            if params is None:
                action = int(action_rng.integers(5))
            else:
                probs = forward_batch(params, obs.reshape(1, -1), spec)[0][0]
                u = action_rng.random()
                action = int(min(np.searchsorted(np.cumsum(probs), u, side="right"), 4))
            prev_obs = obs
            state, obs, reward, done = step(state, Action(action))
            records.append(
                RolloutRecord(
                    epoch=episode,
                    t=t,
                    observation=prev_obs,
                    action=action,
                    reward=reward,
                    done=done,
                )
            )
            t += 1
        if not state.collided:
            survived += 1

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    header = ArchiveHeader(
        config_hash=env_config.config_hash(),
        seed=args.seed,
        checkpoint=checkpoint_id,
    )
    write_rollout_archive(out, header, records)
    print(out)
    print(f"episodes {args.episodes} steps {len(records)} "
          f"survival {survived / args.episodes!r}")
    return 0


def cmd_measure(args: argparse.Namespace) -> int:
    ckpt = load_checkpoint(args.checkpoint)
    measure = _load_measure_arg(args.measure)
    value = evaluate(measure, ckpt.params, ckpt.spec)
    report = evaluation_report(measure, ckpt.params, ckpt.spec)
    report["checkpoint"] = ckpt.checkpoint_id
    print(repr(value))
    text = json.dumps(report, indent=2)
    print(text)
    if args.json:
        Path(args.json).write_text(text + "\n", encoding="utf-8")
    return 0


def cmd_explain_influence(args: argparse.Namespace) -> int:
    ckpt = load_checkpoint(args.checkpoint)
    measure = _load_measure_arg(args.measure)
    report = influence(
        args.records,
        measure,
        ckpt.params,
        clip_eps=args.clip_eps,
        value_coef=args.value_coef,
        entropy_coef=args.entropy_coef,
        spec=ckpt.spec,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report.save_json(out / "influence.json")
    report.save_csv(out / "influence.csv")
    print(f"scored {len(report)} records against {report.measure_name!r}")
    print("epoch t score")
    for epoch, t, score in report.top_k(args.top):
        print(f"{epoch} {t} {score:+.6e}")
    return 0


def cmd_explain_shapley(args: argparse.Namespace) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.toy:
        mdp = toy_chain()
        # state-dependent table so observing its feature bits matters
        right = np.array([0.95, 0.75, 0.5, 0.25, 0.05])
        policy = np.stack([1.0 - right, right], axis=1)
        report = behavior_shapley(
            "return", policy=policy, mdp=mdp,
            feature_names=["bit2", "bit1", "bit0"],
        )
    else:
        if not args.checkpoint or not args.dataset:
            raise BehaviorBenchError(
                "empirical attribution needs --checkpoint and --dataset "
                "(or use --toy)"
            )
        ckpt = load_checkpoint(args.checkpoint)
        measure = _load_measure_arg(args.measure)
        groups, names = _parse_groups(args.groups)
        report = behavior_shapley(
            measure,
            groups=groups,
            dataset=_load_observations(args.dataset, args.limit),
            policy=ckpt.params,
            tolerance=args.tolerance,
            spec=ckpt.spec,
            feature_names=names,
        )
    report.save_json(out / "shapley.json")
    report.save_csv(out / "shapley.csv")
    print(f"target {report.target_name!r} mode {report.mode}")
    print("feature value")
    for name, value in report.top_k(args.top):
        print(f"{name} {value:+.6e}")
    total = float(report.values.sum())
    gap = abs(total - (report.full - report.baseline))
    print(
        f"efficiency: sum {total!r} = "
        f"full {report.full!r} - baseline {report.baseline!r} (gap {gap:.2e})"
    )
    return 0


def cmd_explain_counterfactual(args: argparse.Namespace) -> int:
    ckpt = load_checkpoint(args.checkpoint)
    measure = _load_measure_arg(args.measure)
    if args.eval_obs:
        eval_obs = _load_observations(args.eval_obs, args.limit)
    else:
        eval_obs = _measure_observations(measure)
    result = counterfactual(
        ckpt.params,
        measure,
        target=args.target,
        eval_obs=eval_obs,
        k=args.k,
        pivot_every=args.pivot_every,
        steps=args.steps,
        smoothing=args.smoothing,
        spec=ckpt.spec,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result.save_json(out / "counterfactual.json")
    cf_id = save_checkpoint(
        out / "counterfactual.ckpt",
        result.params,
        ckpt.spec,
        seed=ckpt.seed,
        step=ckpt.step,
    )
    print(f"achieved {result.achieved!r} target {result.target!r}")
    print(f"kl_from_origin {result.kl_from_origin!r}")
    print(f"steps {len(result.trace)} converged {result.converged} "
          f"stalled {result.stalled}")
    print(f"counterfactual checkpoint {cf_id}")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    from behaviorbench.report import render_report

    for path in render_report(args.run, args.out):
        print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="behaviorbench",
        description="Behavior measures, training, and explanation tooling "
        "for the highway driving benchmark.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run PPO training and write a run directory")
    p.add_argument("--seed", type=int, required=True, help="run seed")
    p.add_argument("--timesteps", type=_positive_int, default=200_000,
                   help="total environment steps")
    p.add_argument("--batch-size", type=_positive_int, default=2048,
                   help="timesteps collected per epoch")
    p.add_argument("--minibatch-size", type=_positive_int, default=256,
                   help="records per gradient step")
    p.add_argument("--inner-epochs", type=_positive_int, default=4,
                   help="passes over each batch")
    p.add_argument("--lr", type=_nonneg_float, default=3e-4, help="learning rate")
    p.add_argument("--gamma", type=float, default=0.99, help="discount factor")
    p.add_argument("--lam", type=float, default=0.95,
                   help="advantage estimation decay")
    p.add_argument("--clip-eps", type=float, default=0.2, help="PPO clip width")
    p.add_argument("--entropy-coef", type=float, default=0.01,
                   help="entropy bonus weight")
    p.add_argument("--value-coef", type=float, default=0.5,
                   help="value loss weight")
    p.add_argument("--kl-budget", type=float, default=0.01,
                   help="stop updating an epoch once mean KL exceeds this")
    p.add_argument("--optimizer", choices=("adam", "sgd"), default="adam")
    p.add_argument("--measure", action="append", metavar="FILE",
                   help="measure file to log each epoch (repeatable)")
    p.add_argument("--no-rollouts", action="store_true",
                   help="skip writing per-epoch rollout archives")
    p.add_argument("--out", metavar="DIR",
                   help="run directory (default: $BEHAVIORBENCH_RUNS/run-seedN)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("rollout", help="roll a policy out and archive the steps")
    p.add_argument("--checkpoint", metavar="FILE",
                   help="policy checkpoint; omit for uniform-random actions")
    p.add_argument("--seed", type=int, required=True, help="rollout seed")
    p.add_argument("--episodes", type=_positive_int, default=10,
                   help="episodes to run")
    p.add_argument("--out", required=True, metavar="FILE",
                   help="archive path (.jsonl)")
    p.set_defaults(func=cmd_rollout)

    p = sub.add_parser("measure", help="evaluate a measure at a checkpoint")
    p.add_argument("--checkpoint", required=True, metavar="FILE")
    p.add_argument("--measure", metavar="FILE",
                   help="measure or scenario file (default: bundled fixture)")
    p.add_argument("--json", metavar="FILE", help="also write the report here")
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("explain", help="run an explainer and write report files")
    kinds = p.add_subparsers(dest="kind", required=True)

    q = kinds.add_parser("influence", help="score an epoch's training records")
    q.add_argument("--records", required=True, metavar="FILE",
                   help="epoch record dump (.npz)")
    q.add_argument("--checkpoint", required=True, metavar="FILE",
                   help="snapshot the records were collected under")
    q.add_argument("--measure", metavar="FILE",
                   help="measure file (default: bundled fixture)")
    q.add_argument("--clip-eps", type=float, default=0.2)
    q.add_argument("--value-coef", type=float, default=0.5)
    q.add_argument("--entropy-coef", type=float, default=0.01)
    q.add_argument("--top", type=_positive_int, default=10,
                   help="rows in the printed table")
    q.add_argument("--out", default=".", metavar="DIR")
    q.set_defaults(func=cmd_explain_influence)

    q = kinds.add_parser("shapley", help="per-feature attribution of a measure")
    q.add_argument("--toy", action="store_true",
                   help="run the exact tabular demonstration instead")
    q.add_argument("--checkpoint", metavar="FILE")
    q.add_argument("--measure", metavar="FILE",
                   help="measure file (default: bundled fixture)")
    q.add_argument("--dataset", metavar="FILE",
                   help="archive or measure file supplying observations")
    q.add_argument("--groups", default="rows",
                   help="'rows', 'features', or e.g. '0,1,2;3,4'")
    q.add_argument("--tolerance", type=float, default=1e-6,
                   help="feature matching tolerance")
    q.add_argument("--limit", type=_positive_int, default=512,
                   help="max observations read from an archive")
    q.add_argument("--top", type=_positive_int, default=10)
    q.add_argument("--out", default=".", metavar="DIR")
    q.set_defaults(func=cmd_explain_shapley)

    q = kinds.add_parser("counterfactual",
                         help="search for nearby parameters hitting a target value")
    q.add_argument("--checkpoint", required=True, metavar="FILE")
    q.add_argument("--measure", metavar="FILE",
                   help="measure file (default: bundled fixture)")
    q.add_argument("--target", type=float, required=True,
                   help="desired measure value")
    q.add_argument("--k", type=_nonneg_float, default=1.0,
                   help="KL penalty weight")
    q.add_argument("--pivot-every", type=_positive_int, default=25)
    q.add_argument("--steps", type=_positive_int, default=250)
    q.add_argument("--smoothing", choices=("abs", "huber"), default="abs")
    q.add_argument("--eval-obs", metavar="FILE",
                   help="observations for the KL penalty "
                        "(default: the measure's own)")
    q.add_argument("--limit", type=_positive_int, default=512)
    q.add_argument("--out", default=".", metavar="DIR")
    q.set_defaults(func=cmd_explain_counterfactual)

    p = sub.add_parser("report", help="render series CSV and figures for a run")
    p.add_argument("--run", required=True, metavar="DIR", help="run directory")
    p.add_argument("--out", metavar="DIR",
                   help="output directory (default: RUN/report)")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BehaviorBenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
