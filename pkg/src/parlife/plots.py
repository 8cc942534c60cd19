"""Figure rendering for the CLI report path.

Each table-producing command can drop a PNG next to its CSV; these helpers
keep the plotting concerns out of the analysis code.  The Agg backend is
forced so rendering works headless.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .analysis import SubstitutionReport, SweepTable

_AXIS_LABELS = {
    "alpha": "participation rate",
    "g_over_p": "guarantee ratio G/P",
    "p_over_v0": "lump-sum ratio P/V0",
    "asset_value": "asset value V",
    "nu": "payout rate",
    "t_mat": "contract maturity (years)",
    "tau2": "participation tax rate",
    "tau": "tax rate",
}


def _label(axis: str) -> str:
    return _AXIS_LABELS.get(axis, axis)


def plot_sweep(table: SweepTable, path: str | Path, title: str = "") -> Path:
    """Line plot of every numeric column of a sweep against its axis."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    skip = {"immediate", "residual", "boundary", "error"}
    for name, col in table.columns.items():
        if name in skip:
            continue
        ax.plot(table.values, col, label=name)
    ax.set_xlabel(_label(table.axis))
    ax.legend()
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_region(table: SweepTable, y_axis: str, path: str | Path,
                title: str = "") -> Path:
    """Scatter of positive (filled) versus zero (open) optimal-rate cells."""
    path = Path(path)
    x = table.columns["p_over_v0"]
    y = table.columns[y_axis]
    pos = table.columns["positive"] > 0.5
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.scatter(x[pos], y[pos], marker="s", color="0.2", label="positive")
    ax.scatter(x[~pos], y[~pos], marker="s", facecolors="none",
               edgecolors="0.2", label="zero")
    ax.set_xlabel(_label("p_over_v0"))
    ax.set_ylabel(_label(y_axis))
    if title:
        ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_substitution(reports: list[SubstitutionReport], path: str | Path,
                      v0: float) -> Path:
    """Volatility derivatives of equity and liability, one panel per report."""
    path = Path(path)
    n = len(reports)
    fig, axes = plt.subplots(1, n, figsize=(4.5 * n, 4.0), squeeze=False)
    for ax, rep in zip(axes[0], reports):
        ratio = rep.v_grid / v0
        ax.plot(ratio, rep.de_dsigma, label="dE/dsigma")
        ax.plot(ratio, rep.dl_dsigma, label="dL/dsigma")
        ax.axhline(0.0, color="0.5", lw=0.8)
        if rep.flags.any():
            ax.fill_between(ratio, 0, 1, where=rep.flags,
                            transform=ax.get_xaxis_transform(),
                            alpha=0.15, color="tab:red", label="substitution")
        ax.set_title(f"alpha={rep.alpha:g}, T={rep.t_mat:g}")
        ax.set_xlabel("V / V0")
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
