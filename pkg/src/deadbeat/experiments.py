"""Noise-robustness experiments over the observers.

Three standard studies, all built on the same pieces: simulate the plant
once, corrupt the measured output with a bounded noise signal, run the
reduced-order observer, and summarize the estimate error.

* ``bibo_sweep``        -- bounded noise at several amplitudes; the error
                           ceiling should scale with the bound.
* ``cico_run``          -- noise converging to zero; the reset-error tail
                           should sink below a floor set by the remaining
                           noise (decay = 0 serves as negative control).
* ``small_error_margin``-- bisect for the largest tested amplitude keeping
                           the error under a target over a finite noise
                           family.  Evidence, not a certificate: only the
                           listed family members are exercised.

Rows of a sweep are independent of each other and are evaluated in listed
order, so results are deterministic; a parallel map over rows merged by
index would give byte-identical output.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DivergenceError, ObservabilityError
from .estimator import DEFAULT_TOL
from .integrate import simulate_plant
from .models import SystemModel
from .noise import NoiseSpec, make_noise
from .observer import reset_error_trace, run_reduced_order
from .signals import Signal, Trajectory

__all__ = ["SweepRow", "ExperimentResult", "bibo_sweep", "cico_run", "small_error_margin"]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SweepRow:
    """Error summary of one observer run against one noise realization."""

    delta: float
    seed: int
    sup_err: float  # sup of |z - x| over nodes at or after the first reset
    final_window_err: float  # sup of |z - x| over the last window
    last_reset_err: float
    diverged: bool = False
    observability_failed: bool = False


@dataclass
class ExperimentResult:
    kind: str
    rows: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)


def _noisy_output(y: Signal, spec: NoiseSpec) -> tuple[Signal, Signal]:
    e = make_noise(spec, y.grid, y.dim)
    if spec.kind == "none" or spec.amplitude == 0.0:
        return y, e  # untouched signal: noiseless paths stay bit-identical
    return Signal(y.grid, y.values + e.values), e


def _error_row(run, truth: Trajectory, w_steps: int, delta: float, seed: int) -> SweepRow:
    zs = run.z_signal.values
    xs = truth.x_signal.values
    err = np.linalg.norm(zs - xs, axis=1)
    trace = reset_error_trace(run, truth)
    return SweepRow(
        delta=delta,
        seed=seed,
        sup_err=float(err[w_steps:].max()),
        final_window_err=float(err[-(w_steps + 1) :].max()),
        last_reset_err=trace[-1][1] if trace else float("inf"),
    )


def _failed_row(delta: float, seed: int, diverged: bool) -> SweepRow:
    inf = float("inf")
    return SweepRow(
        delta=delta,
        seed=seed,
        sup_err=inf,
        final_window_err=inf,
        last_reset_err=inf,
        diverged=diverged,
        observability_failed=not diverged,
    )


def _run_one(model, truth, u, spec, z0, r, tol, w_steps):
    """Run one noisy observer pass; returns (row, run or None on failure)."""
    ym, _ = _noisy_output(truth.y_signal, spec)
    try:
        run = run_reduced_order(model, ym, u, z0, r, tol=tol, on_failure="abort")
    except DivergenceError:
        return _failed_row(spec.amplitude, spec.seed, diverged=True), None
    except ObservabilityError:
        return _failed_row(spec.amplitude, spec.seed, diverged=False), None
    return _error_row(run, truth, w_steps, spec.amplitude, spec.seed), run


def bibo_sweep(
    model: SystemModel,
    x0,
    y0,
    u: Signal,
    r: float,
    T: float,
    h_s: float,
    amplitudes,
    template: NoiseSpec,
    z0=None,
    tol: float = DEFAULT_TOL,
) -> ExperimentResult:
    """Bounded-noise amplitude sweep; one row per amplitude.

    The plant runs once, noiselessly; each row corrupts the measurement with
    ``template`` at that row's amplitude and reruns the observer.  Rows that
    diverge or lose observability are flagged and the sweep continues.
    """
    amplitudes = [float(a) for a in amplitudes]
    truth = simulate_plant(model, x0, y0, u, T, h_s)
    w_steps = truth.grid.steps_of(r)
    if z0 is None:
        z0 = np.zeros(model.n)
    result = ExperimentResult(
        kind="bibo",
        meta={
            "model": model.name,
            "r": r,
            "T": T,
            "h_s": h_s,
            "noise_kind": template.kind,
            "omega": template.omega,
            "decay": template.decay,
            "seed": template.seed,
        },
    )
    for delta in amplitudes:
        spec = replace(template, amplitude=delta)
        row, _ = _run_one(model, truth, u, spec, z0, r, tol, w_steps)
        result.rows.append(row)
    return result


def cico_run(
    model: SystemModel,
    x0,
    y0,
    u: Signal,
    r: float,
    T: float,
    h_s: float,
    spec: NoiseSpec,
    z0=None,
    tol: float = DEFAULT_TOL,
) -> ExperimentResult:
    """Converging-noise run: does the reset-error tail track the noise down?

    ``spec`` must be of kind "decaying-sinusoid"; decay = 0 is accepted and
    gives the non-converging negative control.  The result's meta carries
    the noise floor over the final window, the tail threshold (10x floor),
    whether the last reset error met it, and the full reset-error trace.
    """
    if spec.kind != "decaying-sinusoid":
        raise ValueError(f"cico_run expects decaying-sinusoid noise, got {spec.kind!r}")
    truth = simulate_plant(model, x0, y0, u, T, h_s)
    grid = truth.grid
    w_steps = grid.steps_of(r)
    if z0 is None:
        z0 = np.zeros(model.n)

    _, e = _noisy_output(truth.y_signal, spec)
    row, run = _run_one(model, truth, u, spec, z0, r, tol, w_steps)

    e_norm = np.linalg.norm(e.values, axis=1)
    noise_floor = float(e_norm[-(w_steps + 1) :].max())
    threshold = 10.0 * noise_floor
    trace = reset_error_trace(run, truth) if run is not None else []
    return ExperimentResult(
        kind="cico",
        rows=[row],
        meta={
            "model": model.name,
            "r": r,
            "T": T,
            "h_s": h_s,
            "noise_kind": spec.kind,
            "omega": spec.omega,
            "decay": spec.decay,
            "seed": spec.seed,
            "noise_floor": noise_floor,
            "threshold": threshold,
            "criterion_met": bool(row.last_reset_err <= threshold),
            "reset_trace": trace,
        },
    )


DEFAULT_FAMILY = (
    NoiseSpec(kind="uniform", seed=1),
    NoiseSpec(kind="sinusoid", omega=100.0),
)


def small_error_margin(
    model: SystemModel,
    x0,
    y0,
    u: Signal,
    r: float,
    T: float,
    h_s: float,
    eps: float,
    family=DEFAULT_FAMILY,
    ceiling: float = 0.5,
    iters: int = 12,
    z0=None,
    tol: float = DEFAULT_TOL,
) -> float:
    """Largest tested noise amplitude keeping sup error under ``eps``.

    Bisects amplitude over the worst case of the noise family.  Returns the
    probe ceiling when even that passes, and 0.0 (with a logged diagnostic)
    when the smallest probed amplitude already violates the target.  The
    returned value is always an amplitude that was actually run.
    """
    truth = simulate_plant(model, x0, y0, u, T, h_s)
    w_steps = truth.grid.steps_of(r)
    if z0 is None:
        z0 = np.zeros(model.n)

    def passes(delta: float) -> bool:
        for template in family:
            spec = replace(template, amplitude=delta)
            row, _ = _run_one(model, truth, u, spec, z0, r, tol, w_steps)
            if row.diverged or row.observability_failed or not row.sup_err < eps:
                return False
        return True

    if passes(ceiling):
        return ceiling
    smallest = ceiling * 2.0 ** (-iters)
    if not passes(smallest):
        log.warning(
            "smallest probed amplitude %.3e already violates eps=%.3e; margin is 0",
            smallest,
            eps,
        )
        return 0.0
    lo, hi = smallest, ceiling
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if passes(mid):
            lo = mid
        else:
            hi = mid
    return lo
