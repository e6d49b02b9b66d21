import numpy as np
import pytest

from deadbeat import NOISE_KINDS, NoiseSpec, SampleGrid, Signal, apply_noise, make_noise


def _signal(count=2001, dim=1, h_s=1e-3):
    grid = SampleGrid(0.0, h_s, count)
    vals = np.cos(grid.times()).reshape(-1, 1) * np.ones((1, dim))
    return Signal(grid, vals)


def test_kinds_tuple():
    assert NOISE_KINDS == ("none", "uniform", "sinusoid", "decaying-sinusoid")


def test_spec_validation():
    with pytest.raises(ValueError):
        NoiseSpec(kind="gaussian", amplitude=0.1)
    with pytest.raises(ValueError):
        NoiseSpec(kind="uniform", amplitude=-0.1)
    with pytest.raises(ValueError):
        NoiseSpec(kind="decaying-sinusoid", amplitude=0.1, decay=-1.0)
    NoiseSpec(kind="decaying-sinusoid", amplitude=0.1, decay=0.0)  # zero decay is legal


def test_none_returns_the_same_object():
    s = _signal()
    assert apply_noise(s, NoiseSpec(kind="none")) is s


def test_zero_amplitude_returns_the_same_object():
    s = _signal()
    assert apply_noise(s, NoiseSpec(kind="uniform", amplitude=0.0, seed=5)) is s


def test_uniform_bound_holds_rowwise():
    s = _signal(dim=3)
    delta = 0.07
    ym = apply_noise(s, NoiseSpec(kind="uniform", amplitude=delta, seed=2))
    e = ym.values - s.values
    norms = np.linalg.norm(e, axis=1)
    assert norms.max() <= delta + 1e-15
    assert norms.max() > 0.5 * delta  # rescaling should not crush the noise


def test_uniform_seeded_reproducible():
    s = _signal()
    a = apply_noise(s, NoiseSpec(kind="uniform", amplitude=0.1, seed=42))
    b = apply_noise(s, NoiseSpec(kind="uniform", amplitude=0.1, seed=42))
    c = apply_noise(s, NoiseSpec(kind="uniform", amplitude=0.1, seed=43))
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)


def test_sinusoid_matches_formula():
    s = _signal()
    delta, omega = 0.02, 37.0
    ym = apply_noise(s, NoiseSpec(kind="sinusoid", amplitude=delta, omega=omega))
    e = ym.values[:, 0] - s.values[:, 0]
    t = s.grid.times()
    np.testing.assert_allclose(e, delta * np.sin(omega * t), atol=1e-15)


def test_sinusoid_norm_bound_multichannel():
    s = _signal(dim=4)
    delta = 0.5
    ym = apply_noise(s, NoiseSpec(kind="sinusoid", amplitude=delta, omega=11.0))
    norms = np.linalg.norm(ym.values - s.values, axis=1)
    assert norms.max() <= delta + 1e-12


def test_decaying_sinusoid_envelope():
    s = _signal(count=5001)
    delta, omega, lam = 0.3, 50.0, 0.7
    ym = apply_noise(s, NoiseSpec(kind="decaying-sinusoid", amplitude=delta, omega=omega, decay=lam))
    t = s.grid.times()
    e = np.abs(ym.values[:, 0] - s.values[:, 0])
    assert np.all(e <= delta * np.exp(-lam * t) + 1e-15)
    # the tail is strictly smaller than the head
    assert e[-500:].max() < 0.1 * e[:500].max()


def test_zero_decay_reduces_to_plain_sinusoid():
    s = _signal()
    a = apply_noise(s, NoiseSpec(kind="decaying-sinusoid", amplitude=0.1, omega=9.0, decay=0.0))
    b = apply_noise(s, NoiseSpec(kind="sinusoid", amplitude=0.1, omega=9.0))
    assert np.array_equal(a.values, b.values)


def test_make_noise_shape_and_determinism():
    grid = SampleGrid(0.0, 0.01, 301)
    e1 = make_noise(NoiseSpec(kind="uniform", amplitude=1.0, seed=0), grid, 2)
    e2 = make_noise(NoiseSpec(kind="uniform", amplitude=1.0, seed=0), grid, 2)
    assert e1.values.shape == (301, 2)
    assert np.array_equal(e1.values, e2.values)


def test_noise_does_not_mutate_the_source():
    s = _signal()
    before = s.values.copy()
    apply_noise(s, NoiseSpec(kind="uniform", amplitude=0.2, seed=1))
    assert np.array_equal(s.values, before)
