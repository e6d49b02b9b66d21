"""Uniform sample grids and the signals stored on them.

All time bookkeeping is done with integer node indices against a uniform
grid ``t0 + j*h_s``; float times are derived from indices, never accumulated,
so reruns and window arithmetic are exactly reproducible.

Storage runs at step ``h_s`` while integration macro-steps span ``2*h_s``,
which puts the midpoint stage of every macro-step on a stored sample.  The
estimator side therefore never has to interpolate measured data.  Off-node
queries remain available for reporting paths (4-point Lagrange, O(h_s^4)).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import GridError

__all__ = ["SampleGrid", "Signal", "Trajectory", "window_shift", "ALIGN_RTOL"]

# Alignment slack for float->index conversion, as a fraction of h_s.
ALIGN_RTOL = 1e-9


@dataclass(frozen=True)
class SampleGrid:
    """Uniform time grid with ``count`` nodes at ``t0 + j*h_s``."""

    t0: float
    h_s: float
    count: int

    def __post_init__(self):
        if not (self.h_s > 0.0 and np.isfinite(self.h_s)):
            raise GridError(f"storage step must be positive, got {self.h_s!r}")
        if self.count < 2:
            raise GridError(f"grid needs at least 2 nodes, got {self.count}")

    @property
    def span(self) -> float:
        return (self.count - 1) * self.h_s

    @property
    def t_end(self) -> float:
        return self.time_at(self.count - 1)

    def time_at(self, j: int) -> float:
        return self.t0 + j * self.h_s

    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.count) * self.h_s

    def index_of(self, t: float) -> int:
        """Exact node index of ``t``; GridError if off-node or out of range."""
        rel = (t - self.t0) / self.h_s
        j = int(round(rel))
        if abs(rel - j) > ALIGN_RTOL * max(1.0, abs(rel)):
            raise GridError(f"time {t!r} is not on the grid (step {self.h_s!r})")
        if not 0 <= j <= self.count - 1:
            raise GridError(f"time {t!r} outside grid span [{self.t0!r}, {self.t_end!r}]")
        return j

    def steps_of(self, duration: float) -> int:
        """Number of storage steps spanned by ``duration``; GridError if not whole."""
        rel = duration / self.h_s
        s = int(round(rel))
        if s <= 0 or abs(rel - s) > ALIGN_RTOL * max(1.0, abs(rel)):
            raise GridError(f"duration {duration!r} is not a positive whole number of steps")
        return s


class Signal:
    """Samples of a vector-valued function of time on a SampleGrid.

    ``values`` has shape (count, dim) and is frozen after construction, so
    signals are safe to share between runs.
    """

    __slots__ = ("grid", "values")

    def __init__(self, grid: SampleGrid, values: np.ndarray):
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2 or values.shape[0] != grid.count:
            raise GridError(
                f"values shape {values.shape} does not match grid count {grid.count}"
            )
        values.setflags(write=False)
        self.grid = grid
        self.values = values

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def at(self, t: float) -> np.ndarray:
        """Value at ``t``: the stored sample on a node, 4-point Lagrange off-node."""
        grid = self.grid
        rel = (t - grid.t0) / grid.h_s
        j = int(round(rel))
        if abs(rel - j) <= ALIGN_RTOL * max(1.0, abs(rel)):
            if not 0 <= j <= grid.count - 1:
                raise GridError(f"time {t!r} outside signal span")
            return self.values[j]
        if rel < -ALIGN_RTOL or rel > grid.count - 1 + ALIGN_RTOL:
            raise GridError(f"time {t!r} outside signal span")
        return self._interp(np.array([rel]))[0]

    def resample(self, times: np.ndarray) -> np.ndarray:
        """Vectorized ``at`` over an array of times; returns (len(times), dim)."""
        grid = self.grid
        times = np.asarray(times, dtype=float)
        rel = (times - grid.t0) / grid.h_s
        j = np.rint(rel).astype(int)
        aligned = np.abs(rel - j) <= ALIGN_RTOL * np.maximum(1.0, np.abs(rel))
        if np.any((rel < -ALIGN_RTOL) | (rel > grid.count - 1 + ALIGN_RTOL)):
            bad = times[(rel < -ALIGN_RTOL) | (rel > grid.count - 1 + ALIGN_RTOL)][0]
            raise GridError(f"time {bad!r} outside signal span")
        out = np.empty((len(times), self.dim))
        if np.all(aligned):
            out[:] = self.values[np.clip(j, 0, grid.count - 1)]
            return out
        out[aligned] = self.values[np.clip(j[aligned], 0, grid.count - 1)]
        out[~aligned] = self._interp(rel[~aligned])
        return out

    def _interp(self, rel: np.ndarray) -> np.ndarray:
        # Cubic Lagrange through the 4 nearest nodes, stencil clamped at the ends.
        count = self.grid.count
        base = np.floor(rel).astype(int) - 1
        base = np.clip(base, 0, count - 4) if count >= 4 else np.zeros_like(base)
        if count < 4:  # degenerate short signals: fall back to linear
            i0 = np.clip(np.floor(rel).astype(int), 0, count - 2)
            w = (rel - i0)[:, None]
            return (1.0 - w) * self.values[i0] + w * self.values[i0 + 1]
        s = (rel - base)[:, None]  # local coordinate in [1, 2] for interior points
        v0 = self.values[base]
        v1 = self.values[base + 1]
        v2 = self.values[base + 2]
        v3 = self.values[base + 3]
        w0 = -(s - 1) * (s - 2) * (s - 3) / 6.0
        w1 = s * (s - 2) * (s - 3) / 2.0
        w2 = -s * (s - 1) * (s - 3) / 2.0
        w3 = s * (s - 1) * (s - 2) / 6.0
        return w0 * v0 + w1 * v1 + w2 * v2 + w3 * v3


@dataclass(frozen=True)
class Trajectory:
    """Plant solution sampled on a storage grid.

    If ``diverged_at`` is set the arrays stop at the last finite node and
    nothing after that time should be consumed.
    """

    x_signal: Signal
    y_signal: Signal
    diverged_at: Optional[float] = None

    @property
    def grid(self) -> SampleGrid:
        return self.x_signal.grid


def window_shift(signal: Signal, t_start: float, duration: float) -> Signal:
    """Extract ``signal`` on [t_start, t_start + duration], re-based to time 0.

    Both bounds must land on grid nodes; misalignment raises GridError.
    This is the windowing operator the observers apply before every reset.
    """
    grid = signal.grid
    j0 = grid.index_of(t_start)
    steps = grid.steps_of(duration)
    j1 = j0 + steps
    if j1 > grid.count - 1:
        raise GridError(
            f"window [{t_start!r}, +{duration!r}] runs past the signal span"
        )
    out_grid = SampleGrid(0.0, grid.h_s, steps + 1)
    return Signal(out_grid, signal.values[j0 : j1 + 1])
