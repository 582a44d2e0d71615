"""Figure rendering for the report paths.

Renders the per-step error curves and output comparisons that accompany the
CSV artifacts.  Uses the non-interactive Agg backend so the CLI can run
headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_error_figure(path, series: dict[str, np.ndarray],
                      bounds: dict[str, float] | None = None,
                      title: str = "Per-step mean squared output error") -> None:
    """Plot one mean-squared-error curve per labelled method, with optional
    horizontal certified-bound lines, and write the figure to ``path``."""
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    for label, values in series.items():
        ax.plot(np.arange(len(values)), np.asarray(values, dtype=float), label=label)
    for label, bound in (bounds or {}).items():
        ax.axhline(float(bound), linestyle="--", linewidth=1.0,
                   label=f"{label} bound")
    ax.set_xlabel("step k")
    ax.set_ylabel(r"mean $\|y_k - \hat{y}_k\|^2$")
    ax.set_yscale("log")
    ax.set_title(title)
    ax.legend(loc="best", fontsize=9)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_output_figure(path, y: np.ndarray, yhat_by_method: dict[str, np.ndarray],
                       channel: int = 0,
                       title: str = "Mean output trajectories") -> None:
    """Plot the (ensemble-mean) original output against each method's
    reduced output for one channel."""
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    y = np.asarray(y, dtype=float)
    ax.plot(np.arange(y.shape[0]), y[:, channel], "k-", label="original", linewidth=1.2)
    for label, yhat in yhat_by_method.items():
        yhat = np.asarray(yhat, dtype=float)
        ax.plot(np.arange(yhat.shape[0]), yhat[:, channel], "--", label=label)
    ax.set_xlabel("step k")
    ax.set_ylabel(f"output channel {channel + 1}")
    ax.set_title(title)
    ax.legend(loc="best", fontsize=9)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
