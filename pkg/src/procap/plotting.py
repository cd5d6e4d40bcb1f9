"""Figures for metrics reports and ablation tables (written to files, never shown)."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "figure.figsize": (6.4, 3.6),
    "figure.dpi": 120,
    "axes.labelsize": 10,
    "axes.titlesize": 11,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "legend.fontsize": 8,
    "legend.frameon": False,
    "savefig.bbox": "tight",
}


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_ablation(tables: Sequence, path, metric: str = "acc") -> Path:
    """Grouped bars (one group per row label, one bar per dataset) with std error bars."""
    labels = []
    for t in tables:
        for r in t.rows:
            if r.label not in labels:
                labels.append(r.label)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        width = 0.8 / max(len(tables), 1)
        x = np.arange(len(labels))
        for k, t in enumerate(tables):
            means, stds = [], []
            for label in labels:
                row = next((r for r in t.rows if r.label == label), None)
                rep = row.report if row else None
                means.append(100 * getattr(rep, f"mean_{metric}") if rep else np.nan)
                stds.append(100 * getattr(rep, f"std_{metric}") if rep else 0.0)
            ax.bar(x + (k - (len(tables) - 1) / 2) * width, means, width, yerr=stds, capsize=3,
                   label=t.dataset_name or f"table {k}")
        ax.set_xticks(x)
        ax.set_xticklabels(labels, rotation=20, ha="right")
        ax.set_ylabel("Accuracy (%)" if metric == "acc" else "AUC (%)")
        if len(tables) > 1 or tables and tables[0].dataset_name:
            ax.legend()
        return _save(fig, path)


def plot_seeds(report, path, title: str = "") -> Path:
    """Per-seed AUC and accuracy with the mean drawn as a dashed line."""
    seeds = [r.seed for r in report.per_seed]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for key, mean, marker in (("auc", report.mean_auc, "o"), ("accuracy", report.mean_acc, "s")):
            vals = [100 * getattr(r, key) for r in report.per_seed]
            line, = ax.plot(seeds, vals, marker, label=key.upper() if key == "auc" else "Acc")
            ax.axhline(100 * mean, ls="--", lw=0.8, color=line.get_color())
        ax.set_xlabel("seed")
        ax.set_ylabel("%")
        ax.set_xticks(seeds)
        if title:
            ax.set_title(title)
        ax.legend()
        return _save(fig, path)
