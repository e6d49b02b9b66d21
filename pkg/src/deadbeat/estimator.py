"""Finite-window state reconstruction.

Given one window of measured output and input samples, the coefficient
callbacks of the model are enough to rebuild, by quadrature alone, everything
needed to recover the unmeasured state exactly:

* ``phi``    -- transition factor of dx/dt = A(y,u) x           (dPhi = A Phi)
* ``theta``  -- forced response from zero initial state         (dth = A th + b)
* ``q``      -- accumulated transposed-transition output coupling (dq = Phi' C')
* ``xi``     -- output drift integral                           (dxi = f + C th)
* ``p``      -- driftless output increment, p = y - y(0) - xi
* ``gramian``-- Q = integral of q q', and the moment integral of q p

On noiseless data p(t) = q(t)' x(0) identically, so the least-squares problem
"which initial state explains this window" has the closed-form solution
x(0) = Q^{-1} * integral(q p), and the window cost

    J(xi) = integral |p - q' xi|^2 = pp - 2 xi.qp + xi' Q xi

is minimized at it.  Pushing the solution through the window gives the state
at the right endpoint: phi_end x(0) + theta_end.  All integrals are advanced
as one augmented ODE system under the same fixed-step RK4 as the plant, so a
window is a pure function of its samples.

The Gramian's positive-definiteness is the operational distinguishability
test: it is gated by the smallest Cholesky pivot (normalized by the largest
diagonal entry) against a tolerance, never by an explicit inverse.  No
analytic observability certificate is attempted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, GridError, ObservabilityError
from .models import SystemModel
from .signals import ALIGN_RTOL, Signal, window_shift

__all__ = [
    "WindowData",
    "WindowBundle",
    "GramianReport",
    "extract_window",
    "propagate_window",
    "gramian_report",
    "solve_initial_state",
    "window_cost",
    "reconstruct_end_state",
    "closed_form_end_state_scalar",
    "observability_determinant",
    "observability_determinant_search",
]

DEFAULT_TOL = 1e-10


class WindowData:
    """One reconstruction window: output and input samples on [0, r].

    Both signals are window-relative (origin 0) and must have equal span.
    The output grid must hold a whole, positive number of macro-steps; a
    window shorter than one macro-step is degenerate and rejected.  The
    input signal may be sampled finer (h_s/2) than the output; only its
    values at the output's stage times are ever consumed.
    """

    __slots__ = ("y_window", "u_window")

    def __init__(self, y_window: Signal, u_window: Signal):
        ygrid, ugrid = y_window.grid, u_window.grid
        if abs(ygrid.t0) > ALIGN_RTOL * ygrid.h_s or abs(ugrid.t0) > ALIGN_RTOL * ugrid.h_s:
            raise GridError("window signals must be re-based to start at time 0")
        if abs(ygrid.span - ugrid.span) > ALIGN_RTOL * max(1.0, abs(ygrid.span)):
            raise GridError(
                f"window spans differ: y over {ygrid.span!r}, u over {ugrid.span!r}"
            )
        if (ygrid.count - 1) % 2 != 0 or ygrid.count < 3:
            raise GridError(
                f"window holds {ygrid.count - 1} storage steps; "
                "need a positive even count (whole macro-steps)"
            )
        self.y_window = y_window
        self.u_window = u_window

    @property
    def length(self) -> float:
        return self.y_window.grid.span


def extract_window(y: Signal, u: Signal, t_start: float, r: float) -> WindowData:
    """Slice [t_start, t_start + r] out of running signals and re-base to 0."""
    return WindowData(window_shift(y, t_start, r), window_shift(u, t_start, r))


@dataclass(frozen=True)
class WindowBundle:
    """Quadrature results for one window, sampled at the macro nodes."""

    window_len: float
    node_times: np.ndarray  # (N+1,) window-relative macro-node times
    phi_end: np.ndarray  # (n, n)
    theta_end: np.ndarray  # (n,)
    gramian: np.ndarray  # (n, n) integral of q q'
    qp_integral: np.ndarray  # (n,)
    pp_integral: float
    phi_nodes: np.ndarray  # (N+1, n, n)
    theta_nodes: np.ndarray  # (N+1, n)
    q_nodes: np.ndarray  # (N+1, n, k)
    p_nodes: np.ndarray  # (N+1, k)


def _window_tables(model: SystemModel, window: WindowData):
    """Evaluate the model callbacks once per storage node of the window."""
    ygrid = window.y_window.grid
    ys = window.y_window.values
    us = window.u_window.resample(ygrid.times())
    count, n, k = ygrid.count, model.n, model.k
    A_tab = np.empty((count, n, n))
    b_tab = np.empty((count, n))
    C_tab = np.empty((count, k, n))
    f_tab = np.empty((count, k))
    for j in range(count):
        yj, uj = ys[j], us[j]
        A_tab[j] = model.eval_A(yj, uj)
        b_tab[j] = model.eval_b(yj, uj)
        C_tab[j] = model.eval_C(yj)
        f_tab[j] = model.eval_f(yj, uj)
    return ys, us, A_tab, b_tab, C_tab, f_tab


def propagate_window(model: SystemModel, window: WindowData) -> WindowBundle:
    """Integrate the augmented window system over [0, r].

    One joint RK4 march (macro-step 2*h_s, stages on stored samples) advances
    phi, theta, q, xi and the three integrals (gramian, q.p moment, p.p cost
    offset) together.  Returns the endpoint quantities plus per-macro-node
    samples of phi, theta, q and p.
    """
    n, k = model.n, model.k
    ygrid = window.y_window.grid
    ys, _, A_tab, b_tab, C_tab, f_tab = _window_tables(model, window)
    steps = ygrid.count - 1
    N = steps // 2
    h = 2.0 * ygrid.h_s
    hh = ygrid.h_s
    y0 = ys[0]

    def rates(j, Phi, th, q, xi):
        A = A_tab[j]
        C = C_tab[j]
        p = ys[j] - y0 - xi
        return (
            A @ Phi,
            A @ th + b_tab[j],
            (C @ Phi).T,
            f_tab[j] + C @ th,
            q @ q.T,
            q @ p,
            p @ p,
        )

    Phi = np.eye(n)
    th = np.zeros(n)
    q = np.zeros((n, k))
    xi = np.zeros(k)
    Q = np.zeros((n, n))
    s = np.zeros(n)
    pp = 0.0

    phi_nodes = np.empty((N + 1, n, n))
    theta_nodes = np.empty((N + 1, n))
    q_nodes = np.empty((N + 1, n, k))
    p_nodes = np.empty((N + 1, k))
    phi_nodes[0], theta_nodes[0], q_nodes[0] = Phi, th, q
    p_nodes[0] = 0.0

    for i in range(N):
        j0 = 2 * i
        k1 = rates(j0, Phi, th, q, xi)
        k2 = rates(j0 + 1, Phi + hh * k1[0], th + hh * k1[1], q + hh * k1[2], xi + hh * k1[3])
        k3 = rates(j0 + 1, Phi + hh * k2[0], th + hh * k2[1], q + hh * k2[2], xi + hh * k2[3])
        k4 = rates(j0 + 2, Phi + h * k3[0], th + h * k3[1], q + h * k3[2], xi + h * k3[3])
        w = h / 6.0
        Phi = Phi + w * (k1[0] + 2.0 * (k2[0] + k3[0]) + k4[0])
        th = th + w * (k1[1] + 2.0 * (k2[1] + k3[1]) + k4[1])
        q = q + w * (k1[2] + 2.0 * (k2[2] + k3[2]) + k4[2])
        xi = xi + w * (k1[3] + 2.0 * (k2[3] + k3[3]) + k4[3])
        Q = Q + w * (k1[4] + 2.0 * (k2[4] + k3[4]) + k4[4])
        s = s + w * (k1[5] + 2.0 * (k2[5] + k3[5]) + k4[5])
        pp = pp + w * (k1[6] + 2.0 * (k2[6] + k3[6]) + k4[6])
        phi_nodes[i + 1], theta_nodes[i + 1], q_nodes[i + 1] = Phi, th, q
        p_nodes[i + 1] = ys[j0 + 2] - y0 - xi

    return WindowBundle(
        window_len=ygrid.span,
        node_times=ygrid.times()[::2].copy(),
        phi_end=Phi,
        theta_end=th,
        gramian=Q,
        qp_integral=s,
        pp_integral=float(pp),
        phi_nodes=phi_nodes,
        theta_nodes=theta_nodes,
        q_nodes=q_nodes,
        p_nodes=p_nodes,
    )


def _cholesky_pivots(Q: np.ndarray):
    """Lower Cholesky factor with the Schur-complement pivots it visits.

    Returns (L, pivots); L is None when a pivot fails to be positive (the
    offending pivot is the last list entry).
    """
    n = Q.shape[0]
    L = np.zeros((n, n))
    pivots = []
    for i in range(n):
        d = Q[i, i] - L[i, :i] @ L[i, :i]
        pivots.append(float(d))
        if not d > 0.0:
            return None, pivots
        L[i, i] = math.sqrt(d)
        for r in range(i + 1, n):
            L[r, i] = (Q[r, i] - L[r, :i] @ L[i, :i]) / L[i, i]
    return L, pivots


@dataclass(frozen=True)
class GramianReport:
    """Distinguishability verdict for one window."""

    det_Q: float
    min_eig: float  # smallest Cholesky pivot / largest diagonal entry
    distinguishable: bool
    tolerance_used: float


def gramian_report(bundle: WindowBundle, tol: float = DEFAULT_TOL) -> GramianReport:
    """Judge whether the window separates initial states at tolerance ``tol``.

    ``min_eig`` is a cheap spectral estimate: the smallest Cholesky pivot
    normalized by the largest Gramian diagonal entry.  The window is reported
    distinguishable iff that estimate exceeds ``tol``.
    """
    Q = bundle.gramian
    det_Q = float(np.linalg.det(Q))
    scale = float(np.max(np.diag(Q)))
    if scale <= 0.0:
        return GramianReport(det_Q, 0.0, False, tol)
    _, pivots = _cholesky_pivots(Q)
    min_eig = min(pivots) / scale
    return GramianReport(det_Q, min_eig, min_eig > tol, tol)


def solve_initial_state(bundle: WindowBundle, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Recover the window's initial unmeasured state from its integrals.

    Solves gramian * x0 = qp_integral through the Cholesky factor (forward
    then back substitution; the Gramian is never inverted explicitly).
    Raises ObservabilityError when the normalized smallest pivot is at or
    below ``tol``.
    """
    Q = bundle.gramian
    L, pivots = _cholesky_pivots(Q)
    scale = float(np.max(np.diag(Q)))
    normalized = min(pivots) / scale if scale > 0.0 else 0.0
    if L is None or normalized <= tol:
        raise ObservabilityError(
            f"window gramian is numerically singular: normalized pivot "
            f"{normalized:.3e} <= tol {tol:.3e}"
        )
    n = Q.shape[0]
    rhs = bundle.qp_integral
    w = np.zeros(n)
    for i in range(n):
        w[i] = (rhs[i] - L[i, :i] @ w[:i]) / L[i, i]
    x = np.zeros(n)
    for i in reversed(range(n)):
        x[i] = (w[i] - L[i + 1 :, i] @ x[i + 1 :]) / L[i, i]
    return x


def window_cost(bundle: WindowBundle, xi: np.ndarray) -> float:
    """Least-squares window cost J(xi) = integral |p - q' xi|^2 over the window."""
    xi = np.asarray(xi, dtype=float)
    return float(
        bundle.pp_integral
        - 2.0 * (xi @ bundle.qp_integral)
        + xi @ bundle.gramian @ xi
    )


def reconstruct_end_state(
    model: SystemModel, window: WindowData, tol: float = DEFAULT_TOL
) -> np.ndarray:
    """State at the window's right endpoint, from samples alone.

    On noiseless data this equals the true unmeasured state there (up to
    quadrature error); it is the jump value the observers apply at resets.
    """
    bundle = propagate_window(model, window)
    x0 = solve_initial_state(bundle, tol)
    return bundle.phi_end @ x0 + bundle.theta_end


def closed_form_end_state_scalar(model: SystemModel, window: WindowData) -> float:
    """Independent scalar route to the window endpoint state.

    For drift-free scalar models (n = k = 1, b identically 0, coupling
    c(y) > 0 on the window) the endpoint state has a closed quadrature form:

        exp(I_a(r)) * num / den,
        I_a(t) = int_0^t a,   g(t) = int_0^t c(y) exp(I_a),
        num = int_0^r (y(t) - y(0) - int_0^t f) g(t) dt,
        den = int_0^r g(t)^2 dt.

    All inner integrals are advanced as auxiliary ODE states under the same
    macro-step RK4 as everything else.  This function deliberately shares no
    code with ``reconstruct_end_state``; the two routes cross-check each
    other in the test suite.
    """
    if model.n != 1 or model.k != 1:
        raise DomainError(
            f"closed form needs n=k=1, model has n={model.n}, k={model.k}"
        )
    ygrid = window.y_window.grid
    ys, _, A_tab, b_tab, C_tab, f_tab = _window_tables(model, window)
    if np.max(np.abs(b_tab)) > 0.0:
        raise DomainError("closed form covers drift-free models only (b must vanish)")
    if np.min(C_tab) <= 0.0:
        raise DomainError("closed form requires coupling c(y) > 0 on the window")
    a_tab = A_tab[:, 0, 0]
    c_tab = C_tab[:, 0, 0]
    f_tab = f_tab[:, 0]
    y_tab = ys[:, 0]
    y0 = y_tab[0]

    steps = ygrid.count - 1
    h = 2.0 * ygrid.h_s
    hh = ygrid.h_s

    def rates(j, alpha, F, g):
        ga = c_tab[j] * math.exp(alpha)
        return (a_tab[j], f_tab[j], ga, (y_tab[j] - y0 - F) * g, g * g)

    alpha = F = g = num = den = 0.0
    for i in range(0, steps, 2):
        k1 = rates(i, alpha, F, g)
        k2 = rates(i + 1, alpha + hh * k1[0], F + hh * k1[1], g + hh * k1[2])
        k3 = rates(i + 1, alpha + hh * k2[0], F + hh * k2[1], g + hh * k2[2])
        k4 = rates(i + 2, alpha + h * k3[0], F + h * k3[1], g + h * k3[2])
        w = h / 6.0
        alpha += w * (k1[0] + 2.0 * (k2[0] + k3[0]) + k4[0])
        F += w * (k1[1] + 2.0 * (k2[1] + k3[1]) + k4[1])
        g += w * (k1[2] + 2.0 * (k2[2] + k3[2]) + k4[2])
        num += w * (k1[3] + 2.0 * (k2[3] + k3[3]) + k4[3])
        den += w * (k1[4] + 2.0 * (k2[4] + k3[4]) + k4[4])

    if not den > 0.0:
        raise ObservabilityError(f"degenerate window: denominator integral {den!r}")
    return math.exp(alpha) * num / den


def _phi_dense(model, window, bundle, us, t):
    """Transition factor at an arbitrary window time.

    Exact macro-node samples where possible; otherwise cubic Hermite between
    the bracketing macro nodes using the node derivatives A(y,u) phi (error
    O(h^4), far below the certificate tolerances).
    """
    ygrid = window.y_window.grid
    h = 2.0 * ygrid.h_s
    span = ygrid.span
    if t < -ALIGN_RTOL * h or t > span * (1.0 + ALIGN_RTOL) + ALIGN_RTOL * h:
        raise GridError(f"time {t!r} outside the window span [0, {span!r}]")
    rel = t / h
    i = int(round(rel))
    if abs(rel - i) <= ALIGN_RTOL * max(1.0, abs(rel)):
        return bundle.phi_nodes[i], window.y_window.values[2 * i]
    i = min(int(rel), bundle.phi_nodes.shape[0] - 2)
    theta = rel - i
    ys = window.y_window.values
    p0, p1 = bundle.phi_nodes[i], bundle.phi_nodes[i + 1]
    d0 = model.eval_A(ys[2 * i], us[2 * i]) @ p0
    d1 = model.eval_A(ys[2 * i + 2], us[2 * i + 2]) @ p1
    t2, t3 = theta * theta, theta * theta * theta
    phi_t = (
        (2.0 * t3 - 3.0 * t2 + 1.0) * p0
        + (t3 - 2.0 * t2 + theta) * h * d0
        + (-2.0 * t3 + 3.0 * t2) * p1
        + (t3 - t2) * h * d1
    )
    return phi_t, window.y_window.at(t)


def observability_determinant(model: SystemModel, window: WindowData, times) -> float:
    """Determinant certificate for single-output windows.

    Stacks the rows c(y(t_j)) phi(t_j) at the n requested window times and
    returns their determinant; a nonzero value certifies that those sample
    times pin the initial state down.  Times may be any points inside the
    window span (dense output is used off the macro nodes).
    """
    if model.k != 1:
        raise DomainError(f"determinant certificate needs k=1, model has k={model.k}")
    times = [float(t) for t in times]
    if len(times) != model.n:
        raise ValueError(f"need exactly n={model.n} times, got {len(times)}")
    bundle = propagate_window(model, window)
    ygrid = window.y_window.grid
    us = window.u_window.resample(ygrid.times())
    rows = np.empty((model.n, model.n))
    for r_idx, t in enumerate(times):
        phi_t, y_t = _phi_dense(model, window, bundle, us, t)
        rows[r_idx] = (model.eval_C(y_t) @ phi_t)[0]
    return float(np.linalg.det(rows))


def observability_determinant_search(model: SystemModel, window: WindowData):
    """Greedy hunt for n macro-node times with a large determinant certificate.

    Picks rows c(y) phi one at a time, each maximizing the volume of the
    selection so far (norm of the component orthogonal to the span of the
    already-chosen rows).  Returns (times ascending, determinant in that
    order).  Ties break on the earliest node, so the search is deterministic.
    """
    if model.k != 1:
        raise DomainError(f"determinant certificate needs k=1, model has k={model.k}")
    bundle = propagate_window(model, window)
    n = model.n
    node_count = bundle.phi_nodes.shape[0]
    if node_count < n:
        raise GridError(f"window has {node_count} macro nodes, need at least {n}")
    ys = window.y_window.values
    rows = np.empty((node_count, n))
    for i in range(node_count):
        rows[i] = (model.eval_C(ys[2 * i]) @ bundle.phi_nodes[i])[0]

    residual = rows.copy()
    chosen: list[int] = []
    for _ in range(n):
        norms = np.linalg.norm(residual, axis=1)
        norms[chosen] = -1.0
        pick = int(np.argmax(norms))
        chosen.append(pick)
        v = residual[pick]
        nv = norms[pick]
        if nv > 0.0:
            vhat = v / nv
            residual = residual - np.outer(residual @ vhat, vhat)

    chosen.sort()
    det = float(np.linalg.det(rows[chosen]))
    times = tuple(float(bundle.node_times[i]) for i in chosen)
    return times, det
