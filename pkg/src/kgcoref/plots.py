"""Figure rendering for evaluation reports and threshold sweeps.

Uses the Agg backend so figures render to files in headless runs.
"""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .corpus import PronounType
from .evaluation import MetricReport

_TYPE_LABELS = {
    PronounType.THIRD_PERSONAL: "Third personal",
    PronounType.POSSESSIVE: "Possessive",
    PronounType.DEMONSTRATIVE: "Demonstrative",
}


def save_sweep_figure(sweep: Sequence[tuple[float, MetricReport]], path: str | Path) -> Path:
    """Precision/recall/F1 against the selection threshold, symlog x axis.

    Symlog keeps t=0 plottable next to the 1e-8 .. 0.2 grid.
    """
    if not sweep:
        raise ValueError("sweep is empty, nothing to plot")
    ts = [t for t, _ in sweep]
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for field, style in (("precision", "o-"), ("recall", "s--"), ("f1", "^-")):
        ax.plot(ts, [getattr(r.overall, field) for _, r in sweep], style, label=field)
    ax.set_xscale("symlog", linthresh=1e-8)
    ax.set_xlabel("selection threshold t")
    ax.set_ylabel("score")
    ax.set_ylim(-0.02, 1.02)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    out = Path(path)
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out


def save_report_figure(rows: Sequence[tuple[str, MetricReport]], path: str | Path) -> Path:
    """Grouped bars: F1 per pronoun type plus overall, one group per labeled report."""
    if not rows:
        raise ValueError("no reports to plot")
    groups = [_TYPE_LABELS[t] for t in _TYPE_LABELS] + ["Overall"]
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    width = 0.8 / len(rows)
    for i, (label, report) in enumerate(rows):
        values = [report.per_type[t].f1 for t in _TYPE_LABELS] + [report.overall.f1]
        offsets = [g + (i - (len(rows) - 1) / 2) * width for g in range(len(groups))]
        ax.bar(offsets, values, width=width, label=label)
    ax.set_xticks(range(len(groups)))
    ax.set_xticklabels(groups)
    ax.set_ylabel("F1")
    ax.set_ylim(0.0, 1.05)
    ax.grid(True, axis="y", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    out = Path(path)
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out
