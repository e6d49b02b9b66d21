"""Hybrid dead-beat observers: continuous flow punctured by window resets.

Between resets the estimate flows under the plant's own coefficient
callbacks.  Every ``r`` time units the buffered measurement window is handed
to the estimator and the state estimate jumps to the reconstructed endpoint
value; on noiseless data the estimate therefore equals the true unmeasured
state from the first reset on, for any initial guess.

Two variants:

* reduced order -- estimate z of the unmeasured state only; the flow reads
  the measured output directly:  dz = A(y, u) z + b(y, u).
* full order -- estimate (z, w) of the whole plant state; the flow is
  self-contained, driven by the observer's own output estimate
  (dz = A(w, u) z + b(w, u), dw = f(w, u) + C(w) z), and each reset also
  snaps w to the measured output.

Reset bookkeeping is integer grid-index arithmetic: reset instants are node
``i * (r / h_s)`` exactly, so spacing never drifts.  Stored estimate samples
at reset nodes are the post-jump values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DivergenceError, GridError, ObservabilityError
from .estimator import DEFAULT_TOL, extract_window, reconstruct_end_state
from .integrate import DIVERGENCE_LIMIT
from .models import SystemModel
from .signals import SampleGrid, Signal, Trajectory

__all__ = [
    "ObserverState",
    "ObserverRun",
    "run_reduced_order",
    "run_full_order",
    "reset_error_trace",
]

FAILURE_POLICIES = ("abort", "hold")


@dataclass
class ObserverState:
    """Marching state of one hybrid run (mutated in place by the loop)."""

    z: np.ndarray
    w: Optional[np.ndarray]
    node: int  # current storage-node index
    window_start: int  # storage-node index where the open window began


@dataclass(frozen=True)
class ObserverRun:
    """Sampled result of one observer run."""

    mode: str
    z_signal: Signal
    w_signal: Optional[Signal]
    reset_times: list
    reset_indices: list
    observability_failures: list  # window start times whose reset was skipped
    r: float
    tol: float


def _validate(model: SystemModel, y_meas: Signal, z0, r: float, on_failure: str):
    if on_failure not in FAILURE_POLICIES:
        raise ValueError(f"on_failure must be one of {FAILURE_POLICIES}, got {on_failure!r}")
    if y_meas.dim != model.k:
        raise ValueError(f"measured signal dim {y_meas.dim}, model expects k={model.k}")
    z0 = np.atleast_1d(np.asarray(z0, dtype=float))
    if z0.shape != (model.n,):
        raise ValueError(f"z0 shape {z0.shape}, model expects ({model.n},)")
    grid = y_meas.grid
    steps = grid.count - 1
    if steps % 2 != 0:
        raise GridError(f"measured signal spans {steps} storage steps; need an even count")
    w_steps = grid.steps_of(r)
    if w_steps % 2 != 0:
        raise GridError(
            f"reset interval r={r!r} spans {w_steps} storage steps; "
            "need an even count so resets land on macro nodes"
        )
    if w_steps > steps:
        raise GridError(f"reset interval r={r!r} exceeds the signal span {grid.span!r}")
    return z0, grid, steps, w_steps


def _reset_value(model, y_meas, u, grid, start_idx, r, tol):
    t_start = grid.time_at(start_idx)
    try:
        window = extract_window(y_meas, u, t_start, r)
        return reconstruct_end_state(model, window, tol), t_start
    except ObservabilityError as exc:
        raise ObservabilityError(f"window starting at t={t_start!r}: {exc}") from None


def _check_finite(arrs, t):
    for a in arrs:
        if not bool(np.abs(a).max(initial=0.0) < DIVERGENCE_LIMIT):
            raise DivergenceError(t, f"observer state left the finite range at t={t!r}")


def run_reduced_order(
    model: SystemModel,
    y_meas: Signal,
    u: Signal,
    z0,
    r: float,
    tol: float = DEFAULT_TOL,
    on_failure: str = "abort",
) -> ObserverRun:
    """Run the reduced-order observer over a full measured record.

    ``y_meas`` is the (possibly noisy) sampled output, ``u`` the sampled
    input (h_s/2 sampling recommended, see integrate module).  ``r`` must be
    a whole, even number of storage steps.  ``on_failure`` controls what a
    numerically singular window does: "abort" raises ObservabilityError,
    "hold" skips the jump, records the window start time, and keeps flowing.
    """
    z0, grid, steps, w_steps = _validate(model, y_meas, z0, r, on_failure)
    h_s = grid.h_s
    times = grid.times()
    ys = y_meas.values
    yq = y_meas.resample(times[:-1:2] + 0.5 * h_s)
    u_nodes = u.resample(times)
    uq = u.resample(times[:-1:2] + 0.5 * h_s)

    def rate(yv, uv, z):
        return model.eval_A(yv, uv) @ z + model.eval_b(yv, uv)

    def step(z, h, y_a, y_m, y_b, u_a, u_m, u_b):
        half = 0.5 * h
        k1 = rate(y_a, u_a, z)
        k2 = rate(y_m, u_m, z + half * k1)
        k3 = rate(y_m, u_m, z + half * k2)
        k4 = rate(y_b, u_b, z + h * k3)
        return z + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)

    zs = np.empty((grid.count, model.n))
    zs[0] = z0
    state = ObserverState(z=z0, w=None, node=0, window_start=0)
    reset_times: list = []
    reset_indices: list = []
    failures: list = []

    def apply_reset(idx):
        try:
            value, t_start = _reset_value(
                model, y_meas, u, grid, state.window_start, r, tol
            )
        except ObservabilityError:
            if on_failure == "abort":
                raise
            failures.append(grid.time_at(state.window_start))
        else:
            state.z = value
            zs[idx] = value
            reset_times.append(grid.time_at(idx))
            reset_indices.append(idx)
        state.window_start = idx

    for j in range(0, steps, 2):
        if j > 0 and j % w_steps == 0:
            apply_reset(j)
        z = state.z
        half_idx = j // 2
        zs[j + 1] = step(
            z, h_s, ys[j], yq[half_idx], ys[j + 1], u_nodes[j], uq[half_idx], u_nodes[j + 1]
        )
        zs[j + 2] = step(
            z, 2.0 * h_s, ys[j], ys[j + 1], ys[j + 2], u_nodes[j], u_nodes[j + 1], u_nodes[j + 2]
        )
        _check_finite((zs[j + 2],), grid.time_at(j + 2))
        state.z = zs[j + 2]
        state.node = j + 2
    if steps % w_steps == 0:
        apply_reset(steps)

    return ObserverRun(
        mode="reduced",
        z_signal=Signal(grid, zs),
        w_signal=None,
        reset_times=reset_times,
        reset_indices=reset_indices,
        observability_failures=failures,
        r=r,
        tol=tol,
    )


def run_full_order(
    model: SystemModel,
    y_meas: Signal,
    u: Signal,
    z0,
    w0,
    r: float,
    tol: float = DEFAULT_TOL,
    on_failure: str = "abort",
) -> ObserverRun:
    """Run the full-order observer (state and output estimates).

    Between resets the flow consumes only the input signal; the measured
    output enters at reset instants, through the reconstruction window and
    by snapping the output estimate w to the measurement.
    """
    z0, grid, steps, w_steps = _validate(model, y_meas, z0, r, on_failure)
    w0 = np.atleast_1d(np.asarray(w0, dtype=float))
    if w0.shape != (model.k,):
        raise ValueError(f"w0 shape {w0.shape}, model expects ({model.k},)")
    h_s = grid.h_s
    times = grid.times()
    ys = y_meas.values
    u_nodes = u.resample(times)
    uq = u.resample(times[:-1:2] + 0.5 * h_s)

    def rates(z, w, uv):
        A = model.eval_A(w, uv)
        dz = A @ z + model.eval_b(w, uv)
        dw = model.eval_f(w, uv) + model.eval_C(w) @ z
        return dz, dw

    def step(z, w, h, u_a, u_m, u_b):
        half = 0.5 * h
        k1z, k1w = rates(z, w, u_a)
        k2z, k2w = rates(z + half * k1z, w + half * k1w, u_m)
        k3z, k3w = rates(z + half * k2z, w + half * k2w, u_m)
        k4z, k4w = rates(z + h * k3z, w + h * k3w, u_b)
        sixth = h / 6.0
        return (
            z + sixth * (k1z + 2.0 * (k2z + k3z) + k4z),
            w + sixth * (k1w + 2.0 * (k2w + k3w) + k4w),
        )

    zs = np.empty((grid.count, model.n))
    ws = np.empty((grid.count, model.k))
    zs[0], ws[0] = z0, w0
    state = ObserverState(z=z0, w=w0, node=0, window_start=0)
    reset_times: list = []
    reset_indices: list = []
    failures: list = []

    def apply_reset(idx):
        try:
            value, _ = _reset_value(model, y_meas, u, grid, state.window_start, r, tol)
        except ObservabilityError:
            if on_failure == "abort":
                raise
            failures.append(grid.time_at(state.window_start))
        else:
            state.z = value
            zs[idx] = value
            reset_times.append(grid.time_at(idx))
            reset_indices.append(idx)
        # the output estimate snaps to the measurement either way
        state.w = ys[idx]
        ws[idx] = ys[idx]
        state.window_start = idx

    for j in range(0, steps, 2):
        if j > 0 and j % w_steps == 0:
            apply_reset(j)
        z, w = state.z, state.w
        half_idx = j // 2
        zs[j + 1], ws[j + 1] = step(z, w, h_s, u_nodes[j], uq[half_idx], u_nodes[j + 1])
        zs[j + 2], ws[j + 2] = step(
            z, w, 2.0 * h_s, u_nodes[j], u_nodes[j + 1], u_nodes[j + 2]
        )
        _check_finite((zs[j + 2], ws[j + 2]), grid.time_at(j + 2))
        state.z, state.w = zs[j + 2], ws[j + 2]
        state.node = j + 2
    if steps % w_steps == 0:
        apply_reset(steps)

    return ObserverRun(
        mode="full",
        z_signal=Signal(grid, zs),
        w_signal=Signal(grid, ws),
        reset_times=reset_times,
        reset_indices=reset_indices,
        observability_failures=failures,
        r=r,
        tol=tol,
    )


def reset_error_trace(run: ObserverRun, truth: Trajectory):
    """Per-reset estimate error against a reference trajectory.

    Returns a list of (reset time, |z - x| at that instant) pairs using the
    post-jump estimate samples.  Run and truth must share their grid.
    """
    g1, g2 = run.z_signal.grid, truth.grid
    if (g1.t0, g1.h_s, g1.count) != (g2.t0, g2.h_s, g2.count):
        raise GridError("observer run and reference trajectory use different grids")
    zs = run.z_signal.values
    xs = truth.x_signal.values
    return [
        (t, float(np.linalg.norm(zs[idx] - xs[idx])))
        for t, idx in zip(run.reset_times, run.reset_indices)
    ]
