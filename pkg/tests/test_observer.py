import numpy as np
import pytest

from deadbeat import (
    GridError,
    NoiseSpec,
    ObservabilityError,
    SampleGrid,
    Signal,
    SystemModel,
    apply_noise,
    catalog,
    reset_error_trace,
    run_full_order,
    run_reduced_order,
    simulate_plant,
)

H_S = 1e-3
R = 0.5
T = 2.0


def _setup(name="harmonic-oscillator", h_s=H_S, T=T, u_fn=None):
    m = catalog(name)
    steps = int(round(T / h_s))
    grid = SampleGrid(0.0, 0.5 * h_s, 2 * steps + 1)
    if u_fn is None:
        u = Signal(grid, np.zeros((grid.count, m.m)))
    else:
        u = Signal(grid, u_fn(grid.times()).reshape(-1, m.m))
    x0 = np.ones(m.n) if m.n == 1 else np.array([0.0, 1.0])
    traj = simulate_plant(m, x0, np.zeros(m.k), u, T, h_s)
    return m, traj, u


def test_reduced_recovers_after_one_window_any_start():
    m, traj, u = _setup()
    ws = traj.grid.steps_of(R)
    rng = np.random.default_rng(12)
    for _ in range(10):
        z0 = rng.uniform(-10.0, 10.0, size=2)
        run = run_reduced_order(m, traj.y_signal, u, z0, R)
        err = np.linalg.norm(run.z_signal.values - traj.x_signal.values, axis=1)
        assert err[ws:].max() < 1e-9
        # before the first reset the estimate is generally wrong
        assert err[0] == pytest.approx(np.linalg.norm(z0 - traj.x_signal.values[0]))


def test_full_order_recovers_both_components():
    m, traj, u = _setup()
    ws = traj.grid.steps_of(R)
    rng = np.random.default_rng(13)
    for _ in range(6):
        z0 = rng.uniform(-3.0, 3.0, size=2)
        w0 = rng.uniform(-3.0, 3.0, size=1)
        run = run_full_order(m, traj.y_signal, u, z0, w0, R)
        ez = np.linalg.norm(run.z_signal.values - traj.x_signal.values, axis=1)
        ew = np.linalg.norm(run.w_signal.values - traj.y_signal.values, axis=1)
        assert ez[ws:].max() < 1e-9
        assert ew[ws:].max() < 1e-9


def test_estimates_identical_after_first_reset():
    """The jump overwrites the estimate with a function of the data alone,
    so two runs from different guesses coincide bit for bit from then on."""
    m, traj, u = _setup()
    ws = traj.grid.steps_of(R)
    a = run_reduced_order(m, traj.y_signal, u, np.array([5.0, -7.0]), R)
    b = run_reduced_order(m, traj.y_signal, u, np.array([-2.0, 0.1]), R)
    assert not np.array_equal(a.z_signal.values[:ws], b.z_signal.values[:ws])
    assert np.array_equal(a.z_signal.values[ws:], b.z_signal.values[ws:])


def test_reset_schedule():
    m, traj, u = _setup()
    run = run_reduced_order(m, traj.y_signal, u, np.zeros(2), R)
    np.testing.assert_allclose(run.reset_times, [0.5, 1.0, 1.5, 2.0])
    ws = traj.grid.steps_of(R)
    assert run.reset_indices == [ws, 2 * ws, 3 * ws, 4 * ws]
    assert run.r == R
    assert run.mode == "reduced"
    assert run.observability_failures == []


def test_reset_error_trace_matches_manual():
    m, traj, u = _setup()
    run = run_reduced_order(m, traj.y_signal, u, np.array([4.0, 4.0]), R)
    trace = reset_error_trace(run, traj)
    assert len(trace) == len(run.reset_times)
    for (t, e), idx in zip(trace, run.reset_indices):
        manual = np.linalg.norm(run.z_signal.values[idx] - traj.x_signal.values[idx])
        assert e == manual
        assert e < 1e-9  # noiseless resets are exact up to quadrature
    with pytest.raises(GridError):
        other = simulate_plant(m, np.array([0.0, 1.0]), np.zeros(1), u, 1.0, H_S)
        reset_error_trace(run, other)


def test_flow_between_resets_keeps_constant_state():
    # pure integrator: dz/dt = 0, so z is a step function of the resets
    m, traj, u = _setup("pure-integrator")
    run = run_reduced_order(m, traj.y_signal, u, np.array([9.0]), R)
    ws = traj.grid.steps_of(R)
    z = run.z_signal.values[:, 0]
    assert np.all(z[:ws] == 9.0)
    for k in range(1, 4):
        seg = z[k * ws : (k + 1) * ws]
        assert np.all(seg == seg[0])
        assert seg[0] == pytest.approx(1.0, abs=1e-10)  # true x is 1


def test_full_order_pins_w_to_measurement_at_resets():
    m, traj, u = _setup()
    ym = apply_noise(traj.y_signal, NoiseSpec(kind="sinusoid", amplitude=0.05, omega=40.0))
    run = run_full_order(m, ym, u, np.zeros(2), np.array([2.0]), R)
    for idx in run.reset_indices:
        assert np.array_equal(run.w_signal.values[idx], ym.values[idx])


def test_hold_policy_skips_unsolvable_windows():
    deaf = SystemModel(
        name="deaf",
        n=1, k=1, m=1,
        eval_A=lambda y, u: np.zeros((1, 1)),
        eval_b=lambda y, u: np.zeros(1),
        eval_C=lambda y: np.zeros((1, 1)),
        eval_f=lambda y, u: np.zeros(1),
    )
    steps = int(round(T / H_S))
    grid = SampleGrid(0.0, 0.5 * H_S, 2 * steps + 1)
    u = Signal(grid, np.zeros((grid.count, 1)))
    traj = simulate_plant(deaf, np.ones(1), np.zeros(1), u, T, H_S)

    run = run_reduced_order(deaf, traj.y_signal, u, np.array([3.0]), R, on_failure="hold")
    assert run.reset_times == []
    assert len(run.observability_failures) == 4
    assert np.all(run.z_signal.values == 3.0)  # open loop all the way

    with pytest.raises(ObservabilityError):
        run_reduced_order(deaf, traj.y_signal, u, np.array([3.0]), R, on_failure="abort")


def test_failure_policy_validated():
    m, traj, u = _setup()
    with pytest.raises(ValueError):
        run_reduced_order(m, traj.y_signal, u, np.zeros(2), R, on_failure="ignore")


def test_reset_interval_grid_checks():
    m, traj, u = _setup()
    with pytest.raises(GridError):
        run_reduced_order(m, traj.y_signal, u, np.zeros(2), 0.0005 * 3)  # odd step count
    with pytest.raises(GridError):
        run_reduced_order(m, traj.y_signal, u, np.zeros(2), 0.00123)  # off the grid
    with pytest.raises(GridError):
        run_reduced_order(m, traj.y_signal, u, np.zeros(2), T + 1.0)  # longer than the data


def test_z0_shape_checked():
    m, traj, u = _setup()
    with pytest.raises(ValueError):
        run_reduced_order(m, traj.y_signal, u, np.zeros(3), R)


def test_noisy_measurement_keeps_error_near_noise_scale():
    m, traj, u = _setup("scalar-nonlinear")
    delta = 1e-3
    ym = apply_noise(traj.y_signal, NoiseSpec(kind="sinusoid", amplitude=delta, omega=60.0))
    run = run_reduced_order(m, ym, u, np.array([0.0]), R)
    ws = traj.grid.steps_of(R)
    err = np.abs(run.z_signal.values[ws:, 0] - traj.x_signal.values[ws:, 0])
    assert err.max() < 50.0 * delta
    assert err.max() > 1e-12  # the noise must actually perturb the estimate


def test_runs_are_deterministic():
    m, traj, u = _setup()
    a = run_reduced_order(m, traj.y_signal, u, np.array([1.0, 1.0]), R)
    b = run_reduced_order(m, traj.y_signal, u, np.array([1.0, 1.0]), R)
    assert np.array_equal(a.z_signal.values, b.z_signal.values)
    fa = run_full_order(m, traj.y_signal, u, np.array([1.0, 1.0]), np.zeros(1), R)
    fb = run_full_order(m, traj.y_signal, u, np.array([1.0, 1.0]), np.zeros(1), R)
    assert np.array_equal(fa.z_signal.values, fb.z_signal.values)
    assert np.array_equal(fa.w_signal.values, fb.w_signal.values)
