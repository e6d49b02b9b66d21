"""Measurement-noise generation for the robustness experiments.

Every kind honors the hard amplitude contract sup_t |e(t)| <= amplitude
(Euclidean norm over channels), exactly, not just in expectation:

* none               -- zeros
* uniform            -- seeded PCG64 draws from [-1, 1)^k, rescaled onto the
                        unit ball where needed, times amplitude
* sinusoid           -- amplitude * sin(omega t), replicated across channels
                        with a 1/sqrt(k) factor
* decaying-sinusoid  -- the same under an exp(-decay * t) envelope

``decay = 0`` is legal and degenerates to the plain sinusoid; the harness
uses that as the negative control for converging-noise experiments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .signals import SampleGrid, Signal

__all__ = ["NOISE_KINDS", "NoiseSpec", "make_noise", "apply_noise"]

NOISE_KINDS = ("none", "uniform", "sinusoid", "decaying-sinusoid")


@dataclass(frozen=True)
class NoiseSpec:
    """Recipe for one noise signal; unused fields are ignored per kind."""

    kind: str = "none"
    amplitude: float = 0.0
    omega: float = 0.0
    decay: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}; known: {NOISE_KINDS}")
        if not self.amplitude >= 0.0:
            raise ValueError(f"noise amplitude must be >= 0, got {self.amplitude!r}")
        if not self.decay >= 0.0:
            raise ValueError(f"noise decay must be >= 0, got {self.decay!r}")


def make_noise(spec: NoiseSpec, grid: SampleGrid, dim: int) -> Signal:
    """Sample the noise recipe on ``grid`` with ``dim`` channels."""
    times = grid.times()
    if spec.kind == "none":
        values = np.zeros((grid.count, dim))
    elif spec.kind == "uniform":
        rng = np.random.default_rng(spec.seed)  # PCG64: stable stream across platforms
        draws = rng.uniform(-1.0, 1.0, size=(grid.count, dim))
        # clip onto the unit ball so the Euclidean bound is exact for dim > 1;
        # dividing by 1.0 leaves the dim == 1 stream untouched
        scale = np.maximum(np.linalg.norm(draws, axis=1, keepdims=True), 1.0)
        values = spec.amplitude * (draws / scale)
    else:
        wave = np.sin(spec.omega * times)
        if spec.kind == "decaying-sinusoid":
            wave = np.exp(-spec.decay * times) * wave
        values = spec.amplitude / np.sqrt(dim) * np.repeat(wave[:, None], dim, axis=1)
    return Signal(grid, values)


def apply_noise(y: Signal, spec: NoiseSpec) -> Signal:
    """Measured output y plus sampled noise.

    The "none" kind returns ``y`` itself, untouched, so noiseless experiment
    paths reproduce clean runs bit for bit.
    """
    if spec.kind == "none" or spec.amplitude == 0.0:
        return y
    e = make_noise(spec, y.grid, y.dim)
    return Signal(y.grid, y.values + e.values)
