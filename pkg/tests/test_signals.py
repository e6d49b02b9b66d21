import numpy as np
import pytest

from deadbeat import GridError, SampleGrid, Signal, Trajectory, window_shift


def test_grid_bad_construction_rejected():
    with pytest.raises(GridError):
        SampleGrid(0.0, -0.1, 5)
    with pytest.raises(GridError):
        SampleGrid(0.0, 0.1, 1)


def test_grid_times_span():
    g = SampleGrid(2.0, 0.25, 5)
    assert g.span == pytest.approx(1.0)
    assert g.t_end == pytest.approx(3.0)
    np.testing.assert_allclose(g.times(), [2.0, 2.25, 2.5, 2.75, 3.0])
    assert g.time_at(3) == pytest.approx(2.75)


def test_index_of_exact_nodes():
    g = SampleGrid(0.0, 0.1, 11)
    for j in range(11):
        assert g.index_of(g.time_at(j)) == j


def test_index_of_off_node_raises():
    g = SampleGrid(0.0, 0.1, 11)
    with pytest.raises(GridError):
        g.index_of(0.15)
    with pytest.raises(GridError):
        g.index_of(1.2)  # past the last node


def test_steps_of():
    g = SampleGrid(0.0, 0.001, 5001)
    assert g.steps_of(1.0) == 1000
    assert g.steps_of(0.002) == 2
    with pytest.raises(GridError):
        g.steps_of(0.0015)
    with pytest.raises(GridError):
        g.steps_of(0.0)


def test_signal_shape_checks():
    g = SampleGrid(0.0, 0.5, 3)
    with pytest.raises(GridError):
        Signal(g, np.zeros((4, 1)))
    # 1-D values are accepted as a single-channel signal
    assert Signal(g, np.zeros(3)).dim == 1


def test_signal_values_read_only():
    g = SampleGrid(0.0, 0.5, 3)
    s = Signal(g, np.zeros((3, 2)))
    with pytest.raises(ValueError):
        s.values[0, 0] = 1.0


def test_at_node_is_exact_copy():
    g = SampleGrid(0.0, 0.1, 21)
    vals = np.random.default_rng(0).standard_normal((21, 3))
    s = Signal(g, vals)
    for j in (0, 7, 20):
        assert np.array_equal(s.at(g.time_at(j)), vals[j])


def test_at_off_node_reproduces_cubics():
    """The 4-point interpolant is exact for polynomials of degree <= 3."""
    g = SampleGrid(0.0, 0.05, 41)
    t = g.times()
    vals = (0.5 - 1.2 * t + 3.0 * t**2 - 0.7 * t**3).reshape(-1, 1)
    s = Signal(g, vals)
    for tq in (0.013, 0.514, 1.237, 1.999):
        want = 0.5 - 1.2 * tq + 3.0 * tq**2 - 0.7 * tq**3
        assert s.at(tq)[0] == pytest.approx(want, abs=1e-12)


def test_at_off_node_smooth_accuracy():
    g = SampleGrid(0.0, 0.01, 201)
    s = Signal(g, np.sin(g.times()).reshape(-1, 1))
    worst = 0.0
    for tq in np.linspace(0.005, 1.995, 57):
        worst = max(worst, abs(s.at(tq)[0] - np.sin(tq)))
    assert worst < 1e-9  # h^4 for h = 0.01


def test_at_outside_span_raises():
    g = SampleGrid(0.0, 0.1, 11)
    s = Signal(g, np.zeros((11, 1)))
    with pytest.raises(GridError):
        s.at(-0.05)
    with pytest.raises(GridError):
        s.at(1.05)


def test_short_signal_uses_linear_fallback():
    g = SampleGrid(0.0, 1.0, 2)
    s = Signal(g, np.array([[0.0], [2.0]]))
    assert s.at(0.5)[0] == pytest.approx(1.0)


def test_resample_mixes_nodes_and_offnodes():
    g = SampleGrid(0.0, 0.1, 11)
    vals = (g.times() ** 2).reshape(-1, 1)
    s = Signal(g, vals)
    out = s.resample(np.array([0.0, 0.05, 0.3, 0.95, 1.0]))
    np.testing.assert_allclose(out[:, 0], [0.0, 0.0025, 0.09, 0.9025, 1.0], atol=1e-12)
    # node queries return the stored entries bit for bit
    assert out[0, 0] == vals[0, 0] and out[4, 0] == vals[10, 0]


def test_resample_out_of_range():
    g = SampleGrid(0.0, 0.1, 11)
    s = Signal(g, np.zeros((11, 1)))
    with pytest.raises(GridError):
        s.resample(np.array([0.5, 1.3]))


def test_window_shift_rebases_to_zero():
    g = SampleGrid(0.0, 0.1, 21)
    vals = np.arange(21, dtype=float).reshape(-1, 1)
    s = Signal(g, vals)
    w = window_shift(s, 0.5, 1.0)
    assert w.grid.t0 == 0.0
    assert w.grid.count == 11
    assert np.array_equal(w.values[:, 0], vals[5:16, 0])


def test_window_shift_alignment_checked():
    g = SampleGrid(0.0, 0.1, 21)
    s = Signal(g, np.zeros((21, 1)))
    with pytest.raises(GridError):
        window_shift(s, 0.55, 1.0)
    with pytest.raises(GridError):
        window_shift(s, 0.5, 1.9)  # would run past the end


def test_trajectory_carries_grids():
    g = SampleGrid(0.0, 0.5, 3)
    x = Signal(g, np.ones((3, 2)))
    y = Signal(g, np.zeros((3, 1)))
    traj = Trajectory(x_signal=x, y_signal=y, diverged_at=None)
    assert traj.grid is x.grid
    assert traj.diverged_at is None
