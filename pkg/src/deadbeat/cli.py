"""Command-line harness.

Four subcommands, all driven by one TOML config file (see config module for
the grammar):

* simulate -- integrate the plant, write the sampled trajectory
* observe  -- run an observer against the (optionally noisy) measurement
* check    -- distinguishability report for the first window
* sweep    -- noise-robustness experiments (bibo amplitude sweep, cico run)

Every command writes CSV into the --output directory (plus an SVG figure
with --plot) and prints a one-paragraph summary unless --quiet.

Exit codes: 0 success, 2 configuration problems, 3 divergence, 4 failed
observability gate, 5 I/O failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import RunConfig, parse_config
from .errors import (
    CatalogError,
    ConfigError,
    DivergenceError,
    DomainError,
    ObservabilityError,
)
from .estimator import (
    extract_window,
    gramian_report,
    observability_determinant_search,
    propagate_window,
)
from .experiments import bibo_sweep, cico_run
from .integrate import simulate_plant
from .noise import apply_noise
from .observer import run_full_order, run_reduced_order
from .report import fmt, write_check_csv, write_observer_csv, write_sweep_csv, write_trajectory_csv
from .signals import SampleGrid
from . import plots

__all__ = ["main"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3
EXIT_OBSERVABILITY = 4
EXIT_IO = 5


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="deadbeat",
        description="Hybrid dead-beat observer runs driven by a TOML config.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    specs = [
        ("simulate", "integrate the plant and write the trajectory"),
        ("observe", "run an observer against the measured output"),
        ("check", "distinguishability report for the first window"),
        ("sweep", "noise-robustness experiment defined by [sweep]"),
    ]
    for name, help_text in specs:
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("config", help="path to the TOML run configuration")
        sp.add_argument("--output", default=".", help="directory for CSV/SVG output")
        sp.add_argument("--plot", action="store_true", help="also render an SVG figure")
        sp.add_argument("--seed", type=int, default=None, help="override the noise seed")
        sp.add_argument("--quiet", action="store_true", help="suppress the text summary")
    return parser


def _say(args, *message) -> None:
    if not args.quiet:
        print(*message)


def _fine_input(cfg: RunConfig, steps: int):
    """Sample the input recipe at h_s/2 so every integrator stage hits a node."""
    fine = SampleGrid(0.0, 0.5 * cfg.h_s, 2 * steps + 1)
    return cfg.u.sample(fine)


def _out_paths(args, cfg: RunConfig):
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(args.config).stem
    csv_name = cfg.output.csv or f"{stem}_{args.command}.csv"
    plot_name = cfg.output.plot or f"{stem}_{args.command}.svg"
    return out_dir / csv_name, out_dir / plot_name


def _observer_settings(cfg: RunConfig):
    if cfg.observer is None:
        raise ConfigError([("observer", "section required for this command")])
    return cfg.observer


def cmd_simulate(args, cfg: RunConfig) -> int:
    csv_path, plot_path = _out_paths(args, cfg)
    u = _fine_input(cfg, cfg.steps)
    try:
        traj = simulate_plant(cfg.model, cfg.x0, cfg.y0, u, cfg.T, cfg.h_s)
    except DivergenceError as exc:
        if exc.partial is not None:
            write_trajectory_csv(csv_path, exc.partial)
            _say(args, f"diverged at t={fmt(exc.time)}; partial trajectory in {csv_path}")
        else:
            _say(args, f"diverged at t={fmt(exc.time)}")
        return EXIT_DIVERGED
    write_trajectory_csv(csv_path, traj)
    if args.plot:
        plots.save_trajectory_plot(plot_path, traj)
    _say(
        args,
        f"simulate[{cfg.model.name}]: {traj.grid.count} nodes over T={fmt(cfg.T)}, "
        f"wrote {csv_path}",
    )
    return EXIT_OK


def cmd_observe(args, cfg: RunConfig) -> int:
    settings = _observer_settings(cfg)
    csv_path, plot_path = _out_paths(args, cfg)
    u = _fine_input(cfg, cfg.steps)
    truth = simulate_plant(cfg.model, cfg.x0, cfg.y0, u, cfg.T, cfg.h_s)
    y_meas = apply_noise(truth.y_signal, cfg.noise)
    z0 = settings.z0 if settings.z0 is not None else np.zeros(cfg.model.n)
    if settings.mode == "full":
        w0 = settings.w0 if settings.w0 is not None else cfg.y0
        run = run_full_order(
            cfg.model, y_meas, u, z0, w0, settings.r,
            tol=settings.tol, on_failure=settings.on_failure,
        )
    else:
        run = run_reduced_order(
            cfg.model, y_meas, u, z0, settings.r,
            tol=settings.tol, on_failure=settings.on_failure,
        )
    write_observer_csv(csv_path, run, truth)
    if args.plot:
        plots.save_observer_plot(plot_path, run, truth)
    err = np.linalg.norm(run.z_signal.values - truth.x_signal.values, axis=1)
    w_steps = truth.grid.steps_of(settings.r)
    tail = float(err[w_steps:].max()) if truth.grid.count > w_steps else float("nan")
    skipped = f", {len(run.observability_failures)} window(s) skipped" if run.observability_failures else ""
    _say(
        args,
        f"observe[{run.mode}]: {len(run.reset_times)} resets, "
        f"sup |z-x| after first reset = {tail:.3e}{skipped}, wrote {csv_path}",
    )
    return EXIT_OK


def cmd_check(args, cfg: RunConfig) -> int:
    settings = _observer_settings(cfg)
    csv_path, _ = _out_paths(args, cfg)
    r = settings.r
    r_steps = int(round(r / cfg.h_s))
    u = _fine_input(cfg, r_steps)
    truth = simulate_plant(cfg.model, cfg.x0, cfg.y0, u, r, cfg.h_s)
    window = extract_window(truth.y_signal, u, 0.0, r)
    report = gramian_report(propagate_window(cfg.model, window), settings.tol)
    try:
        cert = observability_determinant_search(cfg.model, window)
    except DomainError as exc:
        cert = None
        _say(args, f"determinant certificate unavailable: {exc}")
    write_check_csv(csv_path, report, cert)
    verdict = "distinguishable" if report.distinguishable else "NOT distinguishable"
    _say(
        args,
        f"check[{cfg.model.name}] window [0, {fmt(r)}]: det_Q={report.det_Q:.6e}, "
        f"min_eig={report.min_eig:.6e} (tol {report.tolerance_used:.1e}) -> {verdict}",
    )
    if cert is not None:
        times = ", ".join(fmt(t) for t in cert[0])
        _say(args, f"certificate: det={cert[1]:.6e} at times ({times})")
    return EXIT_OK


def cmd_sweep(args, cfg: RunConfig) -> int:
    settings = _observer_settings(cfg)
    if cfg.sweep is None:
        raise ConfigError([("sweep", "section required for the sweep command")])
    csv_path, plot_path = _out_paths(args, cfg)
    u = _fine_input(cfg, cfg.steps)
    z0 = settings.z0 if settings.z0 is not None else np.zeros(cfg.model.n)
    if cfg.sweep.kind == "bibo":
        result = bibo_sweep(
            cfg.model, cfg.x0, cfg.y0, u, settings.r, cfg.T, cfg.h_s,
            cfg.sweep.amplitudes, cfg.noise, z0=z0, tol=settings.tol,
        )
    else:
        result = cico_run(
            cfg.model, cfg.x0, cfg.y0, u, settings.r, cfg.T, cfg.h_s,
            cfg.noise, z0=z0, tol=settings.tol,
        )
    write_sweep_csv(csv_path, result)
    if args.plot:
        plots.save_sweep_plot(plot_path, result)
    for row in result.rows:
        flags = []
        if row.diverged:
            flags.append("DIVERGED")
        if row.observability_failed:
            flags.append("OBSERVABILITY FAILED")
        note = f"  [{', '.join(flags)}]" if flags else ""
        _say(
            args,
            f"delta={row.delta:.3e}: sup_err={row.sup_err:.3e}, "
            f"final_window_err={row.final_window_err:.3e}, "
            f"last_reset_err={row.last_reset_err:.3e}{note}",
        )
    if result.kind == "cico":
        met = "met" if result.meta["criterion_met"] else "NOT met"
        _say(
            args,
            f"cico criterion (last reset err <= 10 x final noise floor "
            f"{result.meta['noise_floor']:.3e}): {met}",
        )
    _say(args, f"wrote {csv_path}")
    return EXIT_OK


_COMMANDS = {
    "simulate": cmd_simulate,
    "observe": cmd_observe,
    "check": cmd_check,
    "sweep": cmd_sweep,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config)
        if args.seed is not None:
            cfg = replace(cfg, noise=replace(cfg.noise, seed=args.seed))
        return _COMMANDS[args.command](args, cfg)
    except (ConfigError, CatalogError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except ObservabilityError as exc:
        print(f"observability: {exc}", file=sys.stderr)
        return EXIT_OBSERVABILITY
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
