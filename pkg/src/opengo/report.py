"""Rendering of latency benchmark results: figures plus delimited data.

``render_report`` writes, into one output directory:

* ``latency_trials.csv`` — every trial, one row each,
* ``summary.json`` — the aggregate numbers behind the figures,
* ``fig_cold_warm.png`` — per-skill cold vs warm dispatch latency,
* ``fig_param_scaling.png`` — warm latency against declared parameter
  count,
* ``fig_composition.png`` — composed plans against the sum of their
  constituents, with the coordination overhead called out.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from opengo.bench import TrialResult, export_csv, summarize


def _save(fig: plt.Figure, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def fig_cold_warm(summary: dict, path: Path) -> Path:
    skills = list(summary["singles"])
    cold = [summary["singles"][s]["cold_ms"] for s in skills]
    warm = [summary["singles"][s]["warm_ms"] for s in skills]
    positions = range(len(skills))

    fig, ax = plt.subplots(figsize=(8, 4))
    width = 0.38
    ax.bar([p - width / 2 for p in positions], cold, width, label="cold (first use)", color="#c44e52")
    ax.bar([p + width / 2 for p in positions], warm, width, label="warm (cached)", color="#4c72b0")
    ax.set_xticks(list(positions))
    ax.set_xticklabels(skills, rotation=30, ha="right")
    ax.set_ylabel("dispatch latency (ms)")
    ax.set_title("Instruction-to-actuation latency per skill")
    ax.legend()
    return _save(fig, path)


def fig_param_scaling(summary: dict, path: Path) -> Path:
    counts = sorted(int(k) for k in summary["param_scaling"])
    means = [summary["param_scaling"][c] for c in counts]

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(counts, means, marker="o", color="#4c72b0")
    ax.set_xticks(counts)
    ax.set_xlabel("declared parameters")
    ax.set_ylabel("warm dispatch latency (ms)")
    ax.set_title("Latency grows with parameter count")
    ax.grid(True, alpha=0.3)
    return _save(fig, path)


def fig_composition(summary: dict, path: Path) -> Path:
    labels = list(summary["compositions"])
    composed = [summary["compositions"][c]["composed_ms"] for c in labels]
    sums = [summary["compositions"][c]["constituent_sum_ms"] for c in labels]
    positions = range(len(labels))

    fig, ax = plt.subplots(figsize=(7, 4))
    width = 0.38
    ax.bar([p - width / 2 for p in positions], sums, width, label="sum of constituents", color="#55a868")
    ax.bar([p + width / 2 for p in positions], composed, width, label="composed plan", color="#4c72b0")
    for p, label in zip(positions, labels):
        overhead = summary["compositions"][label]["overhead_ms"]
        ax.annotate(
            f"+{overhead:.0f} ms",
            xy=(p + width / 2, composed[p]),
            xytext=(0, 4),
            textcoords="offset points",
            ha="center",
            fontsize=9,
        )
    sizes = {label: len(summary["compositions"][label]["skills"]) for label in labels}
    ax.set_xticks(list(positions))
    ax.set_xticklabels([f"{label} ({sizes[label]} skills)" for label in labels])
    ax.set_ylabel("non-execution latency (ms)")
    ax.set_title("Coordination overhead of composed plans")
    ax.legend()
    return _save(fig, path)


def render_report(
    singles: Sequence[TrialResult],
    compositions: Sequence[TrialResult],
    out_dir: str | Path,
) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = summarize(singles, compositions)

    paths = {
        "csv": export_csv(list(singles) + list(compositions), out / "latency_trials.csv"),
        "summary": out / "summary.json",
        "cold_warm": fig_cold_warm(summary, out / "fig_cold_warm.png"),
        "param_scaling": fig_param_scaling(summary, out / "fig_param_scaling.png"),
        "composition": fig_composition(summary, out / "fig_composition.png"),
    }
    paths["summary"].write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return paths
