"""Figures for analysis reports.  Floats appear only here, never in verdicts."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .analyzer import Exploration, PosteriorTable, render_trace  # noqa: E402


def _short(trace, width: int = 28) -> str:
    text = render_trace(trace)
    return text if len(text) <= width else text[: width - 1] + "~"


def _key(inputs) -> str:
    return ",".join(map(str, inputs))


def trace_heatmap(exploration: Exploration, path: Path, max_traces: int = 60) -> Path:
    """Pr(trace | input) with inputs as rows, grouped by function value."""
    protocol = exploration.protocol
    spec = protocol.function
    inputs = sorted(exploration.raw, key=lambda i: (spec(i), i))
    dists = {i: exploration.trace_distribution(i) for i in inputs}
    traces = sorted({t for d in dists.values() for t in d})[:max_traces]
    grid = [[float(dists[i].get(t, 0)) for t in traces] for i in inputs]

    fig, ax = plt.subplots(figsize=(min(2 + 0.25 * len(traces), 18), min(1.5 + 0.22 * len(inputs), 14)))
    im = ax.imshow(grid, aspect="auto", cmap="viridis", interpolation="nearest")
    ax.set_yticks(range(len(inputs)))
    ax.set_yticklabels([f"{_key(i)} -> {spec(i)}" for i in inputs], fontsize=6)
    if len(traces) <= 30:
        ax.set_xticks(range(len(traces)))
        ax.set_xticklabels([_short(t) for t in traces], rotation=90, fontsize=6)
    else:
        ax.set_xlabel(f"{len(traces)} traces")
    for row in range(1, len(inputs)):
        if spec(inputs[row]) != spec(inputs[row - 1]):
            ax.axhline(row - 0.5, color="white", linewidth=1.2)
    ax.set_title(f"{protocol.name}: trace distribution per input", fontsize=9)
    fig.colorbar(im, ax=ax, fraction=0.03, label="probability")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def posterior_figure(table: PosteriorTable, name: str, path: Path, max_traces: int = 60) -> Path:
    """Posterior over inputs for each trace, next to the prior."""
    inputs = sorted(table.prior)
    traces = sorted(table.rows)[:max_traces]
    grid = [[float(table.prior[i]) for i in inputs]]
    grid += [[float(table.rows[t][i]) for i in inputs] for t in traces]
    labels = ["prior"] + [("" if table.rows[t] == table.expected(t) else "! ") + _short(t) for t in traces]

    fig, ax = plt.subplots(figsize=(min(2.5 + 0.3 * len(inputs), 16), min(1.5 + 0.2 * len(grid), 14)))
    im = ax.imshow(grid, aspect="auto", cmap="magma", vmin=0, vmax=1, interpolation="nearest")
    ax.axhline(0.5, color="white", linewidth=1.5)
    ax.set_yticks(range(len(grid)))
    ax.set_yticklabels(labels, fontsize=7)
    if len(inputs) <= 40:
        ax.set_xticks(range(len(inputs)))
        ax.set_xticklabels([_key(i) for i in inputs], rotation=90, fontsize=6)
    verdict = "all posteriors as expected" if table.matches_prior() else "rows marked ! leak"
    ax.set_title(f"{name}: posteriors ({verdict})", fontsize=9)
    fig.colorbar(im, ax=ax, fraction=0.03)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
