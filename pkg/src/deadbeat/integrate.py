"""Fixed-step classic Runge-Kutta marches.

One integration scheme is used everywhere in the package: the classic 4-stage
RK4 with macro-step ``h = 2*h_s``.  Stage times then fall on stored samples
(t, t+h_s, t+2*h_s), so sampled inputs are consumed exactly and the scheme
keeps its full order on the observer side where only samples exist.

Midpoint storage nodes of a plant simulation are filled by an additional
half-macro-step (step ``h_s``) from the same left node; that step's internal
stage sits at t + h_s/2, which is why callers should supply time-varying
inputs sampled at h_s/2 resolution (see ``config.InputSpec.sample``).

There is no step-size control anywhere: determinism and exact grid arithmetic
are part of the contract.  A state component of magnitude above
``DIVERGENCE_LIMIT`` (or any non-finite value) aborts with DivergenceError.
"""

from __future__ import annotations

import numpy as np

from .errors import DivergenceError, GridError
from .models import SystemModel
from .signals import SampleGrid, Signal, Trajectory

__all__ = ["DIVERGENCE_LIMIT", "rk4_step", "simulate_plant"]

DIVERGENCE_LIMIT = 1e12


def rk4_step(field, state: np.ndarray, t: float, h: float, inputs=()) -> np.ndarray:
    """One classic RK4 step of ``d state/dt = field(t, state, *input_values)``.

    ``inputs`` is a sequence of Signals evaluated at the stage times t,
    t + h/2, t + h.  When those times sit on the signals' grid nodes (the
    intended use; see module docstring) the stored samples are used exactly
    and the step has local error O(h^5) for smooth fields.

    Raises DivergenceError (carrying the stage time) on non-finite stage
    values or if the result leaves the finite range.
    """
    state = np.asarray(state, dtype=float)

    def eval_at(tau, s):
        vals = [sig.at(tau) for sig in inputs]
        k = np.asarray(field(tau, s, *vals), dtype=float)
        if not np.all(np.isfinite(k)):
            raise DivergenceError(tau, f"field produced non-finite values at t={tau!r}")
        return k

    half = 0.5 * h
    k1 = eval_at(t, state)
    k2 = eval_at(t + half, state + half * k1)
    k3 = eval_at(t + half, state + half * k2)
    k4 = eval_at(t + h, state + h * k3)
    out = state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.abs(out) < DIVERGENCE_LIMIT):
        raise DivergenceError(t + h, f"state left the finite range at t={t + h!r}")
    return out


def _plant_rates(model: SystemModel, x, y, u):
    A = model.eval_A(y, u)
    dx = A @ x + model.eval_b(y, u)
    dy = model.eval_f(y, u) + model.eval_C(y) @ x
    return dx, dy


def _step_plant(model: SystemModel, x, y, h, u0, um, u1):
    """RK4 step of the coupled (x, y) plant; stage inputs u0, um, um, u1."""
    half = 0.5 * h
    k1x, k1y = _plant_rates(model, x, y, u0)
    k2x, k2y = _plant_rates(model, x + half * k1x, y + half * k1y, um)
    k3x, k3y = _plant_rates(model, x + half * k2x, y + half * k2y, um)
    k4x, k4y = _plant_rates(model, x + h * k3x, y + h * k3y, u1)
    sixth = h / 6.0
    return (
        x + sixth * (k1x + 2.0 * (k2x + k3x) + k4x),
        y + sixth * (k1y + 2.0 * (k2y + k3y) + k4y),
    )


def _finite(x: np.ndarray, y: np.ndarray) -> bool:
    # max() propagates NaN, and NaN comparisons are False, so this also
    # catches non-finite entries without a separate isfinite pass.
    return bool(np.abs(x).max(initial=0.0) < DIVERGENCE_LIMIT) and bool(
        np.abs(y).max(initial=0.0) < DIVERGENCE_LIMIT
    )


def simulate_plant(
    model: SystemModel, x0, y0, u: Signal, T: float, h_s: float
) -> Trajectory:
    """Integrate the coupled plant on [0, T] and store every h_s.

    The march advances with macro-steps 2*h_s; midpoint storage nodes come
    from a half-macro-step off the same left node.  T must span a whole
    number of macro-steps.  ``u`` must cover [0, T]; sample it at h_s/2
    resolution so every internal stage hits a node (exact consumption).

    On divergence raises DivergenceError whose ``partial`` attribute holds
    the trajectory truncated just past the first bad node, with
    ``diverged_at`` set to the first bad time; samples at or after
    ``diverged_at`` are not to be consumed.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    y0 = np.atleast_1d(np.asarray(y0, dtype=float))
    if x0.shape != (model.n,):
        raise ValueError(f"x0 shape {x0.shape}, model expects ({model.n},)")
    if y0.shape != (model.k,):
        raise ValueError(f"y0 shape {y0.shape}, model expects ({model.k},)")
    if not (T > 0.0 and np.isfinite(T)):
        raise GridError(f"span T must be positive, got {T!r}")
    grid = SampleGrid(0.0, h_s, 2)  # temporary, for step validation only
    steps = grid.steps_of(T)
    if steps % 2 != 0:
        raise GridError(f"T={T!r} spans {steps} storage steps; need an even count")
    count = steps + 1
    grid = SampleGrid(0.0, h_s, count)

    times = grid.times()
    u_nodes = u.resample(times)
    u_quarter = u.resample(times[:-1:2] + 0.5 * h_s)

    xs = np.empty((count, model.n))
    ys = np.empty((count, model.k))
    xs[0], ys[0] = x0, y0

    def bail(bad_index: int):
        t_bad = grid.time_at(bad_index)
        part_grid = SampleGrid(0.0, h_s, bad_index + 1)
        partial = Trajectory(
            Signal(part_grid, xs[: bad_index + 1].copy()),
            Signal(part_grid, ys[: bad_index + 1].copy()),
            diverged_at=t_bad,
        )
        raise DivergenceError(t_bad, partial=partial)

    for j in range(0, steps, 2):
        x_j, y_j = xs[j], ys[j]
        xs[j + 1], ys[j + 1] = _step_plant(
            model, x_j, y_j, h_s, u_nodes[j], u_quarter[j // 2], u_nodes[j + 1]
        )
        if not _finite(xs[j + 1], ys[j + 1]):
            bail(j + 1)
        xs[j + 2], ys[j + 2] = _step_plant(
            model, x_j, y_j, 2.0 * h_s, u_nodes[j], u_nodes[j + 1], u_nodes[j + 2]
        )
        if not _finite(xs[j + 2], ys[j + 2]):
            bail(j + 2)

    return Trajectory(Signal(grid, xs), Signal(grid, ys))
