import csv

import numpy as np
import pytest

from deadbeat import (
    DivergenceError,
    NoiseSpec,
    SampleGrid,
    Signal,
    bibo_sweep,
    catalog,
    extract_window,
    gramian_report,
    observability_determinant_search,
    propagate_window,
    run_reduced_order,
    simulate_plant,
)
from deadbeat.report import (
    fmt,
    write_check_csv,
    write_observer_csv,
    write_sweep_csv,
    write_trajectory_csv,
)

H_S = 2e-3


def _run(T=1.0):
    m = catalog("harmonic-oscillator")
    steps = int(round(T / H_S))
    grid = SampleGrid(0.0, 0.5 * H_S, 2 * steps + 1)
    u = Signal(grid, np.zeros((grid.count, 1)))
    traj = simulate_plant(m, np.array([0.0, 1.0]), np.zeros(1), u, T, H_S)
    return m, traj, u


def test_fmt_round_trips_floats():
    rng = np.random.default_rng(8)
    for _ in range(200):
        x = float(rng.standard_normal() * 10.0 ** rng.integers(-8, 8))
        assert float(fmt(x)) == x
    assert fmt(1.0) == "1"
    assert fmt(0.1) == "0.10000000000000001"


def test_trajectory_csv_layout(tmp_path):
    _, traj, _ = _run()
    p = tmp_path / "traj.csv"
    write_trajectory_csv(p, traj)
    with open(p, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "x1", "x2", "y1"]
    assert len(rows) == 1 + traj.grid.count
    assert float(rows[1][1]) == traj.x_signal.values[0, 0]
    assert float(rows[-1][3]) == traj.y_signal.values[-1, 0]


def test_trajectory_csv_divergence_marker(tmp_path):
    m = catalog("scalar-nonlinear")
    grid = SampleGrid(0.0, 5e-3, 2001)
    u = Signal(grid, np.zeros((2001, 1)))
    with pytest.raises(DivergenceError) as exc:
        simulate_plant(m, np.array([1.0]), np.array([5e5]), u, 10.0, 1e-2)
    p = tmp_path / "diverged.csv"
    write_trajectory_csv(p, exc.value.partial)
    text = p.read_text()
    last = text.rstrip("\n").splitlines()[-1]
    assert last.startswith("# diverged at t=")
    # the poisoned node itself is not exported as data
    data_rows = [ln for ln in text.splitlines() if ln and not ln.startswith(("t,", "#"))]
    assert len(data_rows) == exc.value.partial.grid.count - 1


def test_observer_csv_reset_flags(tmp_path):
    m, traj, u = _run(T=2.0)
    run = run_reduced_order(m, traj.y_signal, u, np.array([2.0, 2.0]), 0.5)
    p = tmp_path / "obs.csv"
    write_observer_csv(p, run, traj)
    with open(p, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "x1", "x2", "z1", "z2", "err_norm", "is_reset"]
    flags = [int(r[-1]) for r in rows[1:]]
    assert sum(flags) == len(run.reset_indices)
    for idx in run.reset_indices:
        assert flags[idx] == 1


def test_check_csv_with_and_without_certificate(tmp_path):
    m, traj, u = _run()
    w = extract_window(traj.y_signal, u, 0.0, 1.0)
    rep = gramian_report(propagate_window(m, w))
    cert = observability_determinant_search(m, w)
    p = tmp_path / "check.csv"
    write_check_csv(p, rep, cert)
    with open(p, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["det_Q", "min_eig", "distinguishable", "cert_det", "cert_times"]
    assert rows[1][2] == "1"
    assert ";" in rows[1][4]

    p2 = tmp_path / "nocert.csv"
    write_check_csv(p2, rep, None)
    with open(p2, newline="") as fh:
        rows2 = list(csv.reader(fh))
    assert rows2[1][3] == "" and rows2[1][4] == ""


def test_sweep_csv_round_trip(tmp_path):
    m = catalog("scalar-nonlinear")
    steps = 500
    grid = SampleGrid(0.0, 1e-3, 2 * steps + 1)
    u = Signal(grid, np.zeros((grid.count, 1)))
    res = bibo_sweep(
        m, np.array([1.0]), np.array([0.0]), u, 0.5, 1.0, 2e-3,
        (1e-2,), NoiseSpec(kind="uniform", amplitude=1.0, seed=4),
    )
    p = tmp_path / "sweep.csv"
    write_sweep_csv(p, res)
    with open(p, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == [
        "delta", "seed", "sup_err", "final_window_err",
        "last_reset_err", "diverged", "observability_failed",
    ]
    assert float(rows[1][0]) == 1e-2
    assert float(rows[1][2]) == res.rows[0].sup_err


def test_writers_are_byte_deterministic(tmp_path):
    m, traj, u = _run()
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_trajectory_csv(a, traj)
    write_trajectory_csv(b, traj)
    assert a.read_bytes() == b.read_bytes()
    # newline policy is pinned, so the bytes are stable across platforms
    assert b"\r" not in a.read_bytes()
