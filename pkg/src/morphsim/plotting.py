"""Matplotlib figures for the command-line reports.

Every function draws into a new figure, saves it to ``path`` and closes it.
The non-interactive Agg backend is selected so the CLI works without a
display.
"""

from __future__ import annotations

import os
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_STYLE = {"figure.dpi": 110, "axes.grid": True, "grid.alpha": 0.3,
          "axes.spines.top": False, "axes.spines.right": False,
          "font.size": 9}


def _save(fig, path: str | os.PathLike) -> None:
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_trajectory(time_s: np.ndarray, goal_disp_m: np.ndarray, path,
                    title: str = "", body_length_m: float | None = None) -> None:
    """Displacement along the goal direction over time."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(5.0, 3.2))
        y = np.asarray(goal_disp_m) * 1e3
        ax.plot(time_s, y, lw=1.2)
        ax.axhline(0.0, color="0.5", lw=0.8)
        ax.set_xlabel("time (s)")
        ax.set_ylabel("displacement toward goal (mm)")
        if body_length_m:
            sec = ax.secondary_yaxis("right", functions=(
                lambda mm: mm / (body_length_m * 1e3), lambda bl: bl * body_length_m * 1e3))
            sec.set_ylabel("body lengths")
        ax.set_title(title)
        _save(fig, path)


def plot_search(mean: Sequence[float], std: Sequence[float], maximum: Sequence[float],
                path, title: str = "") -> None:
    """Best fitness per generation: mean with a one-std band and the max."""
    mean = np.asarray(mean, dtype=float)
    std = np.asarray(std, dtype=float)
    maximum = np.asarray(maximum, dtype=float)
    gen = np.arange(len(mean))
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(5.0, 3.2))
        ax.plot(gen, mean, lw=1.4, label="mean")
        ax.fill_between(gen, mean - std, mean + std, alpha=0.25, lw=0)
        ax.plot(gen, maximum, ls="--", lw=1.2, label="max")
        ax.set_xlabel("generation")
        ax.set_ylabel("best speed (BL/s)")
        ax.legend(frameon=False)
        ax.set_title(title)
        _save(fig, path)


def plot_sweep(delta_mu: Sequence[float], mean_mu: Sequence[float],
               speed: Sequence[float | None], valid: Sequence[bool], path,
               title: str = "") -> None:
    """Speed against each friction axis.

    One line is drawn per value of the other axis; invalid points are left
    out.  A single-valued axis gets a single line.
    """
    dm = np.asarray(delta_mu, dtype=float)
    mm = np.asarray(mean_mu, dtype=float)
    sp = np.array([np.nan if s is None else s for s in speed], dtype=float)
    ok = np.asarray(valid, dtype=bool) & np.isfinite(sp)
    with plt.rc_context(_STYLE):
        fig, axes = plt.subplots(1, 2, figsize=(8.0, 3.2))
        for ax, x, other, xl, ol in ((axes[0], dm, mm, "Δμ", "μm"),
                                     (axes[1], mm, dm, "μm", "Δμ")):
            for val in np.unique(other):
                sel = ok & (other == val)
                if sel.any():
                    order = np.argsort(x[sel])
                    ax.plot(x[sel][order], sp[sel][order], marker="o", ms=3, lw=1.1,
                            label=f"{ol} = {val:g}")
            ax.axhline(0.0, color="0.5", lw=0.8)
            ax.set_xlabel(xl)
            ax.set_ylabel("speed (BL/s)")
            if len(np.unique(other)) <= 6:
                ax.legend(frameon=False, fontsize=7)
        fig.suptitle(title)
        _save(fig, path)


def plot_schedule(schedule: np.ndarray, path, title: str = "") -> None:
    """Actuation matrix: filled cells inflate (bladders) or grip (feet)."""
    s = np.asarray(schedule)
    labels = [f"bladder {k}" for k in range(s.shape[0] - 2)] + ["front foot", "rear foot"]
    with plt.rc_context(_STYLE | {"axes.grid": False}):
        fig, ax = plt.subplots(figsize=(5.0, 3.0))
        ax.imshow(s, cmap="Greens", vmin=0, vmax=1.4, aspect="auto",
                  interpolation="nearest")
        ax.set_yticks(range(s.shape[0]), labels)
        ax.set_xticks(range(s.shape[1]))
        ax.set_xlabel("column")
        ax.set_xticks(np.arange(-0.5, s.shape[1]), minor=True)
        ax.set_yticks(np.arange(-0.5, s.shape[0]), minor=True)
        ax.grid(which="minor", color="0.85", lw=0.5)
        ax.tick_params(which="minor", length=0)
        ax.set_title(title)
        _save(fig, path)


__all__ = ["plot_trajectory", "plot_search", "plot_sweep", "plot_schedule"]
