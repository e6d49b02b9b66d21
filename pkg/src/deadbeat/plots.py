"""Figure rendering for the CLI report path.

Figures are drawn with matplotlib against explicit Figure objects (no pyplot
global state) and saved as SVG next to the delimited output.  Plots never
feed back into any computation; CSV content is identical with or without
them.
"""

from __future__ import annotations

import matplotlib
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

import numpy as np

matplotlib.rcParams["svg.hashsalt"] = "deadbeat"  # stable ids inside the SVG

__all__ = ["save_trajectory_plot", "save_observer_plot", "save_sweep_plot"]


def _new_axes(title: str, xlabel: str, ylabel: str):
    fig = Figure(figsize=(7.0, 4.2), dpi=100)
    FigureCanvasAgg(fig)
    ax = fig.add_subplot(111)
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.4)
    return fig, ax


def save_trajectory_plot(path, traj) -> None:
    fig, ax = _new_axes("plant trajectory", "t", "value")
    times = traj.grid.times()
    for i in range(traj.x_signal.dim):
        ax.plot(times, traj.x_signal.values[:, i], label=f"x{i + 1}")
    for i in range(traj.y_signal.dim):
        ax.plot(times, traj.y_signal.values[:, i], "--", label=f"y{i + 1}")
    ax.legend(loc="best", fontsize="small")
    fig.savefig(path, format="svg")


def save_observer_plot(path, run, truth) -> None:
    fig, ax = _new_axes("observer estimate error", "t", "|z - x|")
    times = run.z_signal.grid.times()
    err = np.linalg.norm(run.z_signal.values - truth.x_signal.values, axis=1)
    floor = np.finfo(float).tiny
    ax.semilogy(times, np.maximum(err, floor), lw=0.9)
    for t in run.reset_times:
        ax.axvline(t, color="gray", alpha=0.3, lw=0.6)
    fig.savefig(path, format="svg")


def save_sweep_plot(path, result) -> None:
    if result.kind == "cico" and result.meta.get("reset_trace"):
        fig, ax = _new_axes("reset-error tail under converging noise", "t", "error")
        trace = result.meta["reset_trace"]
        ts = [t for t, _ in trace]
        es = [max(e, np.finfo(float).tiny) for _, e in trace]
        ax.semilogy(ts, es, "o-", ms=3)
        thr = result.meta.get("threshold")
        if thr:
            ax.axhline(thr, color="red", ls="--", lw=0.8, label="10 x final noise floor")
            ax.legend(loc="best", fontsize="small")
    else:
        fig, ax = _new_axes("error ceiling vs noise amplitude", "amplitude", "sup error")
        deltas = [row.delta for row in result.rows]
        sups = [row.sup_err for row in result.rows]
        ax.loglog(deltas, sups, "o-")
    fig.savefig(path, format="svg")
