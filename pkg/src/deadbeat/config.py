"""Run configuration: a TOML document mapped onto validated dataclasses.

Parsing is total: every field is checked for type, shape and admissibility,
and all problems are collected into one ConfigError (field path + reason)
rather than failing at first sight.  Syntax errors surface with the TOML
parser's line/column message.

Grammar (see README for the worked example)::

    [model]    name
    [grid]     h_s, T
    [plant]    x0, y0
    [input]    kind = "constant" | "sinusoid" | "piecewise", ...
    [observer] r, mode, z0, w0, tol, on_failure
    [noise]    kind, amplitude, omega, decay, seed
    [sweep]    kind = "bibo" | "cico", amplitudes
    [output]   csv, plot

[model], [grid] and [plant] are required; the rest are optional except where
a CLI command needs them (the command reports the missing section).  The
reset interval must span a whole, even number of storage steps so resets
land on macro nodes; the grid span likewise.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import CatalogError, ConfigError
from .models import SystemModel, catalog
from .noise import NOISE_KINDS, NoiseSpec
from .signals import SampleGrid, Signal

__all__ = [
    "InputSpec",
    "ObserverSettings",
    "SweepSettings",
    "OutputSettings",
    "RunConfig",
    "parse_config",
]

INPUT_KINDS = ("constant", "sinusoid", "piecewise")
SWEEP_KINDS = ("bibo", "cico")
OBSERVER_MODES = ("reduced", "full")


@dataclass(frozen=True)
class InputSpec:
    """Evaluable input signal recipe; sampled onto grids as needed."""

    kind: str
    value: Optional[np.ndarray] = None  # constant: (m,)
    amplitude: Optional[np.ndarray] = None  # sinusoid: (m,)
    omega: float = 0.0
    phase: float = 0.0
    times: Optional[np.ndarray] = None  # piecewise: ascending, starting at 0
    table: Optional[np.ndarray] = None  # piecewise: (len(times), m)

    @property
    def dim(self) -> int:
        if self.kind == "constant":
            return len(self.value)
        if self.kind == "sinusoid":
            return len(self.amplitude)
        return self.table.shape[1]

    def values_at(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.kind == "constant":
            return np.broadcast_to(self.value, (len(t), len(self.value))).copy()
        if self.kind == "sinusoid":
            return np.sin(self.omega * t + self.phase)[:, None] * self.amplitude
        idx = np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, None)
        return self.table[idx]

    def sample(self, grid: SampleGrid) -> Signal:
        return Signal(grid, self.values_at(grid.times()))


@dataclass(frozen=True)
class ObserverSettings:
    r: float
    mode: str = "reduced"
    z0: Optional[np.ndarray] = None  # defaults to zeros(n)
    w0: Optional[np.ndarray] = None  # defaults to y0
    tol: float = 1e-10
    on_failure: str = "abort"


@dataclass(frozen=True)
class SweepSettings:
    kind: str
    amplitudes: tuple


@dataclass(frozen=True)
class OutputSettings:
    csv: Optional[str] = None
    plot: Optional[str] = None


@dataclass(frozen=True)
class RunConfig:
    source: str
    model: SystemModel
    h_s: float
    T: float
    x0: np.ndarray
    y0: np.ndarray
    u: InputSpec
    observer: Optional[ObserverSettings]
    noise: NoiseSpec
    sweep: Optional[SweepSettings]
    output: OutputSettings

    @property
    def steps(self) -> int:
        return int(round(self.T / self.h_s))


class _Reader:
    """Pulls typed values out of nested TOML tables, collecting issues."""

    REQUIRED = object()

    def __init__(self, doc: dict):
        self.doc = doc
        self.issues: list = []
        self.seen: dict = {}

    def table(self, name: str, required: bool = False) -> dict:
        tab = self.doc.get(name)
        if tab is None:
            if required:
                self.issues.append((name, "required section is missing"))
            self.seen[name] = set()
            return {}
        if not isinstance(tab, dict):
            self.issues.append((name, f"expected a table, got {type(tab).__name__}"))
            self.seen[name] = set()
            return {}
        self.seen[name] = set()
        return tab

    def get(self, tab: dict, section: str, key: str, caster, default=REQUIRED):
        self.seen.setdefault(section, set()).add(key)
        path = f"{section}.{key}"
        if key not in tab:
            if default is self.REQUIRED:
                self.issues.append((path, "required field is missing"))
                return None
            return default
        try:
            return caster(tab[key])
        except (TypeError, ValueError) as exc:
            self.issues.append((path, str(exc)))
            return None

    def finish_unknown_keys(self):
        for section, known in self.seen.items():
            tab = self.doc.get(section)
            if isinstance(tab, dict):
                for key in tab:
                    if key not in known:
                        self.issues.append((f"{section}.{key}", "unknown key"))
        for section in self.doc:
            if section not in self.seen:
                self.issues.append((section, "unknown section"))


def _as_float(v) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValueError(f"expected a number, got {type(v).__name__}")
    return float(v)


def _as_positive(v) -> float:
    f = _as_float(v)
    if not f > 0.0:
        raise ValueError(f"expected a positive number, got {f!r}")
    return f


def _as_int(v) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ValueError(f"expected an integer, got {type(v).__name__}")
    return v


def _as_str(v) -> str:
    if not isinstance(v, str):
        raise ValueError(f"expected a string, got {type(v).__name__}")
    return v


def _as_choice(options):
    def cast(v):
        s = _as_str(v)
        if s not in options:
            raise ValueError(f"expected one of {options}, got {s!r}")
        return s
    return cast


def _as_vector(v) -> np.ndarray:
    if not isinstance(v, list) or not v:
        raise ValueError("expected a non-empty array of numbers")
    return np.array([_as_float(x) for x in v])


def _as_matrix(v) -> np.ndarray:
    if not isinstance(v, list) or not v:
        raise ValueError("expected a non-empty array of arrays")
    rows = [_as_vector(row) for row in v]
    width = len(rows[0])
    if any(len(row) != width for row in rows):
        raise ValueError("rows have unequal lengths")
    return np.stack(rows)


def _dim_check(issues, path, vec, expected, what):
    if vec is not None and len(vec) != expected:
        issues.append((path, f"{what} needs {expected} entries, got {len(vec)}"))


def _parse_input(rd: _Reader, m: int) -> InputSpec:
    tab = rd.table("input")
    if not tab:
        return InputSpec(kind="constant", value=np.zeros(m))
    kind = rd.get(tab, "input", "kind", _as_choice(INPUT_KINDS))
    if kind == "sinusoid":
        amp = rd.get(tab, "input", "amplitude", _as_vector)
        omega = rd.get(tab, "input", "omega", _as_float)
        phase = rd.get(tab, "input", "phase", _as_float, default=0.0)
        _dim_check(rd.issues, "input.amplitude", amp, m, "input amplitude")
        if amp is None or omega is None:
            return InputSpec(kind="constant", value=np.zeros(m))
        return InputSpec(kind="sinusoid", amplitude=amp, omega=omega, phase=phase or 0.0)
    if kind == "piecewise":
        times = rd.get(tab, "input", "times", _as_vector)
        table = rd.get(tab, "input", "values", _as_matrix)
        if times is None or table is None:
            return InputSpec(kind="constant", value=np.zeros(m))
        if len(times) != len(table):
            rd.issues.append(("input.values", "needs one row per entry of input.times"))
        elif np.any(np.diff(times) <= 0.0):
            rd.issues.append(("input.times", "must be strictly increasing"))
        elif times[0] > 0.0:
            rd.issues.append(("input.times", "must start at or before 0"))
        if table.shape[1] != m:
            rd.issues.append(("input.values", f"rows need {m} entries, got {table.shape[1]}"))
        return InputSpec(kind="piecewise", times=times, table=table)
    # constant (also the fallback when kind itself was bad)
    value = rd.get(tab, "input", "value", _as_vector, default=np.zeros(m))
    if value is not None:
        _dim_check(rd.issues, "input.value", value, m, "input value")
    return InputSpec(kind="constant", value=value if value is not None else np.zeros(m))


def parse_config(path) -> RunConfig:
    """Load and validate one TOML run configuration."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError([(str(path), f"cannot read config: {exc}")]) from None
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([(str(path), f"TOML syntax: {exc}")]) from None

    rd = _Reader(doc)

    model_tab = rd.table("model", required=True)
    name = rd.get(model_tab, "model", "name", _as_str)
    model = None
    if name is not None:
        try:
            model = catalog(name)
        except CatalogError as exc:
            rd.issues.append(("model.name", str(exc)))

    grid_tab = rd.table("grid", required=True)
    h_s = rd.get(grid_tab, "grid", "h_s", _as_positive)
    T = rd.get(grid_tab, "grid", "T", _as_positive)
    steps = None
    if h_s is not None and T is not None:
        rel = T / h_s
        steps = int(round(rel))
        if steps < 2 or abs(rel - steps) > 1e-9 * max(1.0, rel):
            rd.issues.append(("grid.T", f"T={T!r} is not a whole number of steps h_s={h_s!r}"))
            steps = None
        elif steps % 2 != 0:
            rd.issues.append(("grid.T", f"T={T!r} spans {steps} steps; an even count is required"))

    plant_tab = rd.table("plant", required=True)
    x0 = rd.get(plant_tab, "plant", "x0", _as_vector)
    y0 = rd.get(plant_tab, "plant", "y0", _as_vector)
    if model is not None:
        _dim_check(rd.issues, "plant.x0", x0, model.n, "x0")
        _dim_check(rd.issues, "plant.y0", y0, model.k, "y0")

    u = _parse_input(rd, model.m if model is not None else 1)

    observer = None
    if "observer" in doc:
        obs_tab = rd.table("observer")
        r = rd.get(obs_tab, "observer", "r", _as_positive)
        mode = rd.get(obs_tab, "observer", "mode", _as_choice(OBSERVER_MODES), default="reduced")
        z0 = rd.get(obs_tab, "observer", "z0", _as_vector, default=None)
        w0 = rd.get(obs_tab, "observer", "w0", _as_vector, default=None)
        tol = rd.get(obs_tab, "observer", "tol", _as_positive, default=1e-10)
        on_failure = rd.get(
            obs_tab, "observer", "on_failure", _as_choice(("abort", "hold")), default="abort"
        )
        if model is not None:
            _dim_check(rd.issues, "observer.z0", z0, model.n, "z0")
            _dim_check(rd.issues, "observer.w0", w0, model.k, "w0")
        if r is not None and h_s is not None:
            rel = r / h_s
            r_steps = int(round(rel))
            if r_steps < 2 or abs(rel - r_steps) > 1e-9 * max(1.0, rel) or r_steps % 2 != 0:
                rd.issues.append(
                    ("observer.r", f"r={r!r} must span a whole, even number of steps h_s={h_s!r}")
                )
            elif steps is not None and r_steps > steps:
                rd.issues.append(("observer.r", f"r={r!r} exceeds the run span T={T!r}"))
        if r is not None and mode is not None and tol is not None and on_failure is not None:
            observer = ObserverSettings(r=r, mode=mode, z0=z0, w0=w0, tol=tol, on_failure=on_failure)

    noise = NoiseSpec()
    if "noise" in doc:
        noise_tab = rd.table("noise")
        kind = rd.get(noise_tab, "noise", "kind", _as_choice(NOISE_KINDS), default="none")
        amplitude = rd.get(noise_tab, "noise", "amplitude", _as_float, default=0.0)
        omega = rd.get(noise_tab, "noise", "omega", _as_float, default=0.0)
        decay = rd.get(noise_tab, "noise", "decay", _as_float, default=0.0)
        seed = rd.get(noise_tab, "noise", "seed", _as_int, default=0)
        if None not in (kind, amplitude, omega, decay, seed):
            try:
                noise = NoiseSpec(kind=kind, amplitude=amplitude, omega=omega, decay=decay, seed=seed)
            except ValueError as exc:
                rd.issues.append(("noise", str(exc)))

    sweep = None
    if "sweep" in doc:
        sweep_tab = rd.table("sweep")
        kind = rd.get(sweep_tab, "sweep", "kind", _as_choice(SWEEP_KINDS))
        amplitudes = rd.get(sweep_tab, "sweep", "amplitudes", _as_vector, default=None)
        if kind == "bibo":
            if amplitudes is None or len(amplitudes) == 0:
                rd.issues.append(("sweep.amplitudes", "bibo sweep needs a non-empty amplitude list"))
            elif np.any(amplitudes <= 0.0):
                rd.issues.append(("sweep.amplitudes", "amplitudes must be positive"))
        if kind == "cico" and noise.kind != "decaying-sinusoid":
            rd.issues.append(("noise.kind", "cico sweep needs decaying-sinusoid noise"))
        if kind is not None:
            sweep = SweepSettings(
                kind=kind,
                amplitudes=tuple(float(a) for a in amplitudes) if amplitudes is not None else (),
            )

    output = OutputSettings()
    if "output" in doc:
        out_tab = rd.table("output")
        csv = rd.get(out_tab, "output", "csv", _as_str, default=None)
        plot = rd.get(out_tab, "output", "plot", _as_str, default=None)
        output = OutputSettings(csv=csv, plot=plot)

    rd.finish_unknown_keys()
    if rd.issues:
        raise ConfigError(rd.issues)

    return RunConfig(
        source=str(path),
        model=model,
        h_s=h_s,
        T=T,
        x0=x0,
        y0=y0,
        u=u,
        observer=observer,
        noise=noise,
        sweep=sweep,
        output=output,
    )
