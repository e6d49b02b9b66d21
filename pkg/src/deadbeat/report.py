"""Delimited output.

All floats serialize with 17 significant digits, which round-trips IEEE
doubles exactly; identical runs therefore produce byte-identical files.
Flags serialize as 0/1.  A diverged simulation writes the rows before the
first bad time and then a single ``# diverged at t=...`` comment line.
"""

from __future__ import annotations

import csv

import numpy as np

from .experiments import ExperimentResult
from .observer import ObserverRun
from .signals import Trajectory

__all__ = [
    "fmt",
    "write_trajectory_csv",
    "write_observer_csv",
    "write_check_csv",
    "write_sweep_csv",
]


def fmt(x) -> str:
    return format(float(x), ".17g")


def _open_writer(fh):
    return csv.writer(fh, lineterminator="\n")


def write_trajectory_csv(path, traj: Trajectory) -> None:
    n = traj.x_signal.dim
    k = traj.y_signal.dim
    header = ["t"] + [f"x{i + 1}" for i in range(n)] + [f"y{i + 1}" for i in range(k)]
    times = traj.grid.times()
    rows = traj.grid.count
    if traj.diverged_at is not None:
        rows = rows - 1  # the last stored node is the first bad one
    with open(path, "w", newline="") as fh:
        w = _open_writer(fh)
        w.writerow(header)
        xs, ys = traj.x_signal.values, traj.y_signal.values
        for j in range(rows):
            w.writerow([fmt(times[j])] + [fmt(v) for v in xs[j]] + [fmt(v) for v in ys[j]])
        if traj.diverged_at is not None:
            fh.write(f"# diverged at t={fmt(traj.diverged_at)}\n")


def write_observer_csv(path, run: ObserverRun, truth: Trajectory) -> None:
    """Estimate vs truth per node: t, x.., z.., [w..,] err_norm, is_reset."""
    n = run.z_signal.dim
    xs = truth.x_signal.values
    zs = run.z_signal.values
    header = ["t"] + [f"x{i + 1}" for i in range(n)] + [f"z{i + 1}" for i in range(n)]
    err = np.linalg.norm(zs - xs, axis=1)
    ws = None
    if run.w_signal is not None:
        ws = run.w_signal.values
        header += [f"w{i + 1}" for i in range(run.w_signal.dim)]
        err = np.sqrt(err**2 + np.linalg.norm(ws - truth.y_signal.values, axis=1) ** 2)
    header += ["err_norm", "is_reset"]
    resets = set(run.reset_indices)
    times = run.z_signal.grid.times()
    with open(path, "w", newline="") as fh:
        w = _open_writer(fh)
        w.writerow(header)
        for j in range(run.z_signal.grid.count):
            row = [fmt(times[j])] + [fmt(v) for v in xs[j]] + [fmt(v) for v in zs[j]]
            if ws is not None:
                row += [fmt(v) for v in ws[j]]
            row += [fmt(err[j]), "1" if j in resets else "0"]
            w.writerow(row)


def write_check_csv(path, report, cert) -> None:
    """One-row distinguishability report; cert is (times, det) or None."""
    header = ["det_Q", "min_eig", "distinguishable", "cert_det", "cert_times"]
    if cert is None:
        cert_det, cert_times = "", ""
    else:
        cert_det = fmt(cert[1])
        cert_times = ";".join(fmt(t) for t in cert[0])
    with open(path, "w", newline="") as fh:
        w = _open_writer(fh)
        w.writerow(header)
        w.writerow(
            [
                fmt(report.det_Q),
                fmt(report.min_eig),
                "1" if report.distinguishable else "0",
                cert_det,
                cert_times,
            ]
        )


def write_sweep_csv(path, result: ExperimentResult) -> None:
    header = [
        "delta",
        "seed",
        "sup_err",
        "final_window_err",
        "last_reset_err",
        "diverged",
        "observability_failed",
    ]
    with open(path, "w", newline="") as fh:
        w = _open_writer(fh)
        w.writerow(header)
        for row in result.rows:
            w.writerow(
                [
                    fmt(row.delta),
                    str(row.seed),
                    fmt(row.sup_err),
                    fmt(row.final_window_err),
                    fmt(row.last_reset_err),
                    "1" if row.diverged else "0",
                    "1" if row.observability_failed else "0",
                ]
            )
