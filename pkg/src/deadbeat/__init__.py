"""Dead-beat observers for systems linear in the unmeasured state.

The library simulates plants of the form

    dx/dt = A(y, u) x + b(y, u)
    dy/dt = f(y, u) + C(y) x

with measured output y, and reconstructs x exactly (up to integration
error) from one window of measurements.  A hybrid observer repeats that
reconstruction every r seconds, giving dead-beat convergence after the
first window regardless of the initial guess.

Layout:

* models      -- system descriptions, validation, built-in catalog
* signals     -- sampled grids, signals, trajectories
* integrate   -- fixed-step RK4 plant simulation
* estimator   -- window propagation, gramian gate, end-state reconstruction
* observer    -- reduced- and full-order hybrid observers
* noise       -- bounded measurement-noise generators
* experiments -- amplitude sweeps, converging-noise runs, error margins
* config      -- TOML run configuration
* report      -- deterministic CSV writers
* plots       -- SVG figures
* cli         -- `deadbeat` command-line entry point
"""

from .errors import (
    CatalogError,
    ConfigError,
    DeadbeatError,
    DivergenceError,
    DomainError,
    GridError,
    ModelError,
    ObservabilityError,
)
from .models import CATALOG_NAMES, SystemModel, ValidationReport, catalog, validate_model
from .signals import SampleGrid, Signal, Trajectory, window_shift
from .integrate import DIVERGENCE_LIMIT, rk4_step, simulate_plant
from .estimator import (
    GramianReport,
    WindowBundle,
    WindowData,
    closed_form_end_state_scalar,
    extract_window,
    gramian_report,
    observability_determinant,
    observability_determinant_search,
    propagate_window,
    reconstruct_end_state,
    solve_initial_state,
    window_cost,
)
from .observer import (
    ObserverRun,
    reset_error_trace,
    run_full_order,
    run_reduced_order,
)
from .noise import NOISE_KINDS, NoiseSpec, apply_noise, make_noise
from .experiments import (
    ExperimentResult,
    SweepRow,
    bibo_sweep,
    cico_run,
    small_error_margin,
)
from .config import InputSpec, RunConfig, parse_config

__version__ = "0.1.0"

__all__ = [
    "CATALOG_NAMES",
    "CatalogError",
    "ConfigError",
    "DIVERGENCE_LIMIT",
    "DeadbeatError",
    "DivergenceError",
    "DomainError",
    "ExperimentResult",
    "GramianReport",
    "GridError",
    "InputSpec",
    "ModelError",
    "NOISE_KINDS",
    "NoiseSpec",
    "ObservabilityError",
    "ObserverRun",
    "RunConfig",
    "SampleGrid",
    "Signal",
    "SweepRow",
    "SystemModel",
    "Trajectory",
    "ValidationReport",
    "WindowBundle",
    "WindowData",
    "apply_noise",
    "bibo_sweep",
    "catalog",
    "cico_run",
    "closed_form_end_state_scalar",
    "extract_window",
    "gramian_report",
    "make_noise",
    "observability_determinant",
    "observability_determinant_search",
    "parse_config",
    "propagate_window",
    "reconstruct_end_state",
    "reset_error_trace",
    "rk4_step",
    "run_full_order",
    "run_reduced_order",
    "simulate_plant",
    "small_error_margin",
    "solve_initial_state",
    "validate_model",
    "window_cost",
    "window_shift",
]
