"""SVG figures generated from the CSV outputs (needs matplotlib)."""
from __future__ import annotations

from pathlib import Path

import numpy as np


def _plt():
    import matplotlib

    matplotlib.use("svg")
    import matplotlib.pyplot as plt

    return plt


def plot_timeseries(csv_paths, out_path):
    """Largest gap against time, one line per replica, log scale."""
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6, 4))
    for p in csv_paths:
        d = np.genfromtxt(p, delimiter=",", names=True)
        ax.semilogy(d["t"], d["max_gap"], lw=0.8, alpha=0.7)
    ax.set_xlabel("t")
    ax.set_ylabel("max gap")
    fig.tight_layout()
    fig.savefig(Path(out_path), metadata={"Date": None})
    plt.close(fig)


def plot_density(grid, out_path):
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(grid.a, grid.values / max(grid.values.max(), 1e-300))
    ax.set_xlabel("opinion")
    ax.set_ylabel(f"u(a, t={grid.time:.2f}) / max u")
    fig.tight_layout()
    fig.savefig(Path(out_path), metadata={"Date": None})
    plt.close(fig)
