"""Plot-ready series and rendered figures from a training run.

The canonical output is a tidy CSV (epoch, series, value) that any
plotter can consume; PNG figures of the same series are rendered next to
it for quick inspection.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from behaviorbench.errors import ContractViolationError

CORE_SERIES = ("mean_norm_return", "survival", "kl")
COMPONENT_SERIES = ("collision_comp", "speed_comp", "lane_comp")


def _read_metrics(path: Path) -> tuple[list[str], list[dict[str, float]]]:
    with path.open("r", encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        columns = list(reader.fieldnames or [])
        rows = [{k: float(v) for k, v in row.items()} for row in reader]
    if "epoch" not in columns or not rows:
        raise ContractViolationError(f"{path} is not a metrics file")
    return columns, rows


def render_report(run_dir: str | Path, out_dir: str | Path | None = None) -> list[Path]:
    """Write series.csv plus training/measure figures; returns the paths."""
    run_dir = Path(run_dir)
    metrics_path = run_dir / "metrics.csv"
    if not metrics_path.exists():
        raise ContractViolationError(f"no metrics.csv under {run_dir}")
    out_dir = Path(out_dir) if out_dir is not None else run_dir / "report"
    out_dir.mkdir(parents=True, exist_ok=True)

    columns, rows = _read_metrics(metrics_path)
    epochs = [row["epoch"] for row in rows]
    series_names = [c for c in columns if c not in ("epoch", "timesteps")]
    measure_names = [
        c
        for c in series_names
        if c not in CORE_SERIES and c not in COMPONENT_SERIES
    ]

    written: list[Path] = []

    series_path = out_dir / "series.csv"
    with series_path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["epoch", "series", "value"])
        for name in series_names:
            for row in rows:
                writer.writerow([int(row["epoch"]), name, repr(row[name])])
    written.append(series_path)

    fig, axes = plt.subplots(1, 3, figsize=(13, 3.6))
    axes[0].plot(epochs, [r["mean_norm_return"] for r in rows])
    axes[0].set_title("mean normalized return")
    axes[1].plot(epochs, [r["survival"] for r in rows])
    axes[1].set_ylim(-0.05, 1.05)
    axes[1].set_title("survival rate")
    for name in COMPONENT_SERIES:
        axes[2].plot(epochs, [r[name] for r in rows], label=name)
    axes[2].legend(fontsize=8)
    axes[2].set_title("reward components")
    for ax in axes:
        ax.set_xlabel("epoch")
    fig.tight_layout()
    training_path = out_dir / "training.png"
    fig.savefig(training_path, dpi=120)
    plt.close(fig)
    written.append(training_path)

    if measure_names:
        fig, ax = plt.subplots(figsize=(6, 3.6))
        for name in measure_names:
            ax.plot(epochs, [r[name] for r in rows], label=name)
        ax.set_xlabel("epoch")
        ax.set_title("behavior measures")
        ax.legend(fontsize=8)
        fig.tight_layout()
        measures_path = out_dir / "measures.png"
        fig.savefig(measures_path, dpi=120)
        plt.close(fig)
        written.append(measures_path)

    return written
