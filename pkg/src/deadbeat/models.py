"""System descriptions: nonlinear dynamics that are linear in the unmeasured state.

Every model has the structure

    dx/dt = A(y, u) x + b(y, u)        x in R^n   (unmeasured)
    dy/dt = f(y, u) + C(y) x           y in R^k   (measured)

with input u in R^m.  The coefficient callbacks may be arbitrary nonlinear
functions of the measured quantities; the unmeasured state only ever enters
linearly.  That structure is what makes exact finite-window reconstruction
possible, and everything downstream (window propagation, Gramian tests, the
observers) assumes it.

Callbacks are expected to be smooth in y and u on the region a run visits;
that assumption is documented per model (see ``SystemModel.notes``) and is
not machine-checked.  ``validate_model`` probes shapes, dtypes and finiteness
only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import CatalogError

__all__ = ["SystemModel", "ValidationReport", "validate_model", "catalog", "CATALOG_NAMES"]


@dataclass(frozen=True)
class SystemModel:
    """Container for the coefficient callbacks of one system.

    eval_A(y, u) -> (n, n): flow matrix of the unmeasured state.
    eval_b(y, u) -> (n,):   drift of the unmeasured state.
    eval_C(y)    -> (k, n): coupling of x into each measured channel.
    eval_f(y, u) -> (k,):   measured-channel drift.

    Callbacks must not mutate their arguments and may return cached arrays;
    the integrators never write into callback results.
    """

    name: str
    n: int
    k: int
    m: int
    eval_A: Callable[[np.ndarray, np.ndarray], np.ndarray]
    eval_b: Callable[[np.ndarray, np.ndarray], np.ndarray]
    eval_C: Callable[[np.ndarray], np.ndarray]
    eval_f: Callable[[np.ndarray, np.ndarray], np.ndarray]
    notes: str = ""


@dataclass
class ValidationReport:
    """Outcome of probing a model's callbacks at random points."""

    model: str
    probes: int
    failures: list = field(default_factory=list)  # (callback, probe index, reason)

    @property
    def ok(self) -> bool:
        return not self.failures

    def __str__(self) -> str:
        if self.ok:
            return f"{self.model}: {self.probes} probes ok"
        lines = [f"{self.model}: {len(self.failures)} failure(s) over {self.probes} probes"]
        lines += [f"  {cb} probe {i}: {why}" for cb, i, why in self.failures]
        return "\n".join(lines)


def _check_value(value, shape) -> str | None:
    arr = np.asarray(value)
    if arr.shape != shape:
        return f"shape {arr.shape}, expected {shape}"
    if not np.issubdtype(arr.dtype, np.floating):
        return f"dtype {arr.dtype}, expected floating"
    if not np.all(np.isfinite(arr)):
        return "non-finite entries"
    return None


def validate_model(model: SystemModel, probes: int = 8, seed: int = 0) -> ValidationReport:
    """Probe the four callbacks at seeded (y, u) points.

    Checks shapes, floating dtype and finiteness.  A passing report does not
    certify smoothness or global existence; it only rules out wiring mistakes.
    """
    rng = np.random.default_rng(seed)
    report = ValidationReport(model=model.name, probes=probes)
    n, k, m = model.n, model.k, model.m
    for i in range(probes):
        y = rng.uniform(-2.0, 2.0, size=k)
        u = rng.uniform(-2.0, 2.0, size=m)
        checks = [
            ("eval_A", lambda: model.eval_A(y, u), (n, n)),
            ("eval_b", lambda: model.eval_b(y, u), (n,)),
            ("eval_C", lambda: model.eval_C(y), (k, n)),
            ("eval_f", lambda: model.eval_f(y, u), (k,)),
        ]
        for name, call, shape in checks:
            try:
                value = call()
            except Exception as exc:  # callback bugs should land in the report
                report.failures.append((name, i, f"raised {type(exc).__name__}: {exc}"))
                continue
            why = _check_value(value, shape)
            if why is not None:
                report.failures.append((name, i, why))
    return report


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    a.setflags(write=False)
    return a


def _pure_integrator() -> SystemModel:
    A = _frozen(np.zeros((1, 1)))
    b = _frozen(np.zeros(1))
    C = _frozen(np.ones((1, 1)))
    f = _frozen(np.zeros(1))
    return SystemModel(
        name="pure-integrator",
        n=1, k=1, m=1,
        eval_A=lambda y, u: A,
        eval_b=lambda y, u: b,
        eval_C=lambda y: C,
        eval_f=lambda y, u: f,
        notes="x constant, y integrates x; the minimal distinguishable system.",
    )


def _harmonic_oscillator() -> SystemModel:
    A = _frozen([[0.0, 1.0], [-1.0, 0.0]])
    b = _frozen(np.zeros(2))
    C = _frozen([[1.0, 0.0]])
    f = _frozen(np.zeros(1))
    return SystemModel(
        name="harmonic-oscillator",
        n=2, k=1, m=1,
        eval_A=lambda y, u: A,
        eval_b=lambda y, u: b,
        eval_C=lambda y: C,
        eval_f=lambda y, u: f,
        notes="x rotates at unit rate, y integrates the first component.",
    )


def _scalar_nonlinear() -> SystemModel:
    # dx/dt = -x, dy/dt = -y + u + (1 + y^2) x.  The coupling 1 + y^2 is
    # bounded below by 1, so every window of positive length distinguishes
    # initial states regardless of the trajectory.
    A = _frozen([[-1.0]])
    b = _frozen(np.zeros(1))

    def eval_C(y):
        return np.array([[1.0 + y[0] * y[0]]])

    def eval_f(y, u):
        return np.array([u[0] - y[0]])

    return SystemModel(
        name="scalar-nonlinear",
        n=1, k=1, m=1,
        eval_A=lambda y, u: A,
        eval_b=lambda y, u: b,
        eval_C=eval_C,
        eval_f=eval_f,
        notes="Scalar output nonlinearity with coupling >= 1; smooth everywhere. "
        "The state flow matrix does not depend on y, so bounded measured "
        "outputs are enough for the noise-robustness experiments.",
    )


_CATALOG = {
    "pure-integrator": _pure_integrator,
    "harmonic-oscillator": _harmonic_oscillator,
    "scalar-nonlinear": _scalar_nonlinear,
}

CATALOG_NAMES = tuple(sorted(_CATALOG))


def catalog(name: str) -> SystemModel:
    """Return a fresh catalog model by name; CatalogError for unknown names."""
    try:
        build = _CATALOG[name]
    except KeyError:
        known = ", ".join(CATALOG_NAMES)
        raise CatalogError(f"unknown model {name!r}; known models: {known}") from None
    return build()
