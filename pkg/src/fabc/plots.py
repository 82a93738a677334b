"""Figure rendering for emitted CSV artifacts.

Strictly downstream of the experiment runners: every function here reads
the delimited files (or the already-parsed objects behind them) and
renders to an image file.  Posterior weights are drawn as raw bars or
heatmaps -- no kernel smoothing, the weights are the whole point.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .calibration import QuantileTable, table_from_csv
from .inference import Posterior, atoms_from_csv

__all__ = [
    "plot_quantile_table",
    "plot_weight_profile",
    "plot_atoms_2d",
    "plot_race",
    "render_from_csv",
]


def _load_table(source) -> QuantileTable:
    return source if isinstance(source, QuantileTable) else table_from_csv(source)


def _load_atoms(source) -> Posterior:
    return source if isinstance(source, Posterior) else atoms_from_csv(source)


def plot_quantile_table(source, path) -> str:
    """One line per probe across quantile levels."""
    table = _load_table(source)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for i in range(table.probes.shape[0]):
        label = ", ".join(f"{v:g}" for v in table.probes[i])
        ax.plot(table.levels, table.entries[i], marker="o", ms=3, label=label)
    ax.set_xlabel("quantile level (0 = min, 1 = max)")
    ax.set_ylabel("matching distance")
    ax.set_title(f"distance quantiles per probe (M={table.m_cal}, {table.matcher_label})")
    ax.legend(title="probe", fontsize=8, ncol=2)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return str(path)


def plot_weight_profile(source, path) -> str:
    """Matching-support weights against a scalar candidate value."""
    post = _load_atoms(source)
    thetas = post.thetas
    if thetas.shape[1] != 1:
        raise ValueError("weight profile plots need 1-d candidates")
    order = np.argsort(thetas[:, 0])
    t = thetas[order, 0]
    w = post.p_match[order]
    sel = post.selected_mask[order]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.vlines(t, 0.0, w, lw=1, color="0.6")
    ax.plot(t[sel], w[sel], "o", ms=3, label="selected")
    if (~sel).any():
        ax.plot(t[~sel], w[~sel], "x", ms=3, color="crimson", label="rejected")
    ax.set_xlabel("candidate value")
    ax.set_ylabel("matching proportion")
    ax.legend(fontsize=8)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return str(path)


def plot_atoms_2d(source, path) -> str:
    """Weights over a planar candidate set, as a scatter heatmap."""
    post = _load_atoms(source)
    thetas = post.thetas
    if thetas.shape[1] != 2:
        raise ValueError("2-d atom plots need 2-d candidates")
    fig, ax = plt.subplots(figsize=(6, 5))
    sc = ax.scatter(thetas[:, 0], thetas[:, 1], c=post.p_match, s=60, marker="s", cmap="viridis")
    sel = post.selected_mask
    if sel.any() and not sel.all():
        ax.scatter(thetas[sel, 0], thetas[sel, 1], facecolors="none", edgecolors="red", s=80)
    fig.colorbar(sc, ax=ax, label="matching proportion")
    ax.set_xlabel("candidate component 1")
    ax.set_ylabel("candidate component 2")
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return str(path)


def plot_race(t_values, comparisons: int, path) -> str:
    """Histogram of per-run win counts with the break-even line."""
    t_values = np.asarray(list(t_values), dtype=float)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(t_values, bins=min(20, max(5, t_values.size)), color="steelblue", edgecolor="white")
    ax.axvline(comparisons / 2, color="crimson", ls="--", label="break-even")
    ax.set_xlabel("wins per run")
    ax.set_ylabel("runs")
    ax.legend(fontsize=8)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return str(path)


def render_from_csv(kind: str, source, path) -> str:
    """Dispatch used by the `plot` subcommand."""
    if kind == "quantile-table":
        return plot_quantile_table(source, path)
    if kind == "atoms-1d":
        return plot_weight_profile(source, path)
    if kind == "atoms-2d":
        return plot_atoms_2d(source, path)
    raise ValueError(f"unknown plot kind: {kind!r}")
