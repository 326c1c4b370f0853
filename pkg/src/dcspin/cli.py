"""Command-line interface: run configs, execute presets, verify results.

Subcommands
-----------
run <config.json>   execute a config (preset or explicit blocks), write CSVs
preset <name>       execute a named preset
verify <name>       run a preset and evaluate its acceptance checks
list-presets        list available presets

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 numerical failure.  Errors also emit a one-line JSON record on stderr.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, ExperimentConfig, load_config
from .constants import angular_from_mhz
from .dynamics import PropagationError
from .presets import PRESETS, run_preset, verify_preset
from .protocols import (
    run_amplitude_error_sweep,
    run_constant,
    run_dcs_dnp,
    run_dcs_sensing,
    run_pm,
    run_topdnp,
    solve_topdnp_detuning,
)
from .spincore import nuclear_frequency
from .sweep import SweepResult
from .waveform import FactorizationError, QuadratureError


def _resolve_detuning(system, spec, plan) -> float | None:
    if plan.detuning_mhz is None or spec.kind != "topdnp":
        return None
    if plan.detuning_mhz == "auto":
        omega_n = nuclear_frequency(system.nuclei[0], system.field_z)
        return solve_topdnp_detuning(spec.rabi, spec.pulse_len, spec.delay, omega_n)
    return angular_from_mhz(plan.detuning_mhz)


def _execute_explicit(config: ExperimentConfig, workers: int | None) -> list[SweepResult]:
    system, spec, plan, policy = (config.system, config.protocol, config.sweep,
                                  config.policy)
    grid_display = plan.grid_display
    kw = {"policy": policy, "amplitude_error": spec.amplitude_error}
    if plan.axis == "nu_mhz":
        grid = np.array([angular_from_mhz(v) for v in grid_display])
        if spec.kind == "dcs":
            res = run_dcs_sensing(system, spec.omega_max, grid,
                                  plan.total_time_ms * 1e-3, workers=workers,
                                  switch_fraction=spec.switch_fraction,
                                  t_initial=spec.t_initial, **kw)
        else:
            res = run_pm(system, spec.omega0, spec.omega1, nu_grid=grid,
                         T=plan.total_time_ms * 1e-3, workers=workers,
                         initial_state_kind=spec.initial_state_kind, **kw)
    elif plan.axis == "detuning_mhz":
        grid = np.array([angular_from_mhz(v) for v in grid_display])
        res = run_topdnp(system, spec.rabi, spec.pulse_len, spec.delay,
                         detuning_grid=grid, T=plan.total_time_ms * 1e-3,
                         workers=workers,
                         initial_state_kind=spec.initial_state_kind, **kw)
    elif plan.axis == "amplitude_error":
        res = run_amplitude_error_sweep(
            system, spec, grid_display, plan.total_time_ms * 1e-3,
            nu=None if plan.nu_mhz is None else angular_from_mhz(plan.nu_mhz),
            detuning=_resolve_detuning(system, spec, plan),
            policy=policy, workers=workers)
    else:  # total_time_ms
        T_grid = grid_display * 1e-3
        if spec.kind == "dcs":
            res = run_dcs_dnp(system, spec.omega_max, angular_from_mhz(plan.nu_mhz),
                              T_grid, switch_fraction=spec.switch_fraction,
                              t_initial=spec.t_initial,
                              reset_every=spec.reset_every, **kw)
        elif spec.kind == "pm":
            res = run_pm(system, spec.omega0, spec.omega1,
                         nu=angular_from_mhz(plan.nu_mhz), T_grid=T_grid,
                         initial_state_kind=spec.initial_state_kind, **kw)
        elif spec.kind == "topdnp":
            res = run_topdnp(system, spec.rabi, spec.pulse_len, spec.delay,
                             detuning=_resolve_detuning(system, spec, plan),
                             T_grid=T_grid,
                             initial_state_kind=spec.initial_state_kind, **kw)
        else:
            res = run_constant(system, spec.omega_e, T_grid,
                               initial_state_kind=spec.initial_state_kind, **kw)
    columns = res.columns
    if spec.measured:
        unknown = [m for m in spec.measured if m not in columns]
        if unknown:
            raise ConfigError(f"protocol.measured: unknown columns {unknown}; "
                              f"available: {sorted(columns)}")
        columns = {m: columns[m] for m in spec.measured}
    metadata = {"config": config.raw, "version": __version__}
    return [SweepResult(res.name, plan.axis, grid_display, columns, metadata)]


def _apply_polarization_convention(results: list[SweepResult],
                                   convention: str) -> list[SweepResult]:
    if convention == "doubled":
        return results
    for res in results:
        for key in list(res.columns):
            if "polarization" in key:
                res.columns[key] = 0.5 * res.columns[key]
        res.metadata["polarization_convention"] = convention
    return results


def write_outputs(results: list[SweepResult], out_dir: Path, manifest: dict) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for res in results:
        written.append(res.write_csv(out_dir / f"{res.name}.csv"))
    manifest = dict(manifest)
    manifest["outputs"] = [p.name for p in written]
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                             encoding="utf-8")
    return written + [manifest_path]


def run_experiment(config: ExperimentConfig, out_dir: str | Path | None = None,
                   workers: int | None = None) -> list[Path]:
    """Execute a resolved config and write one CSV per result plus a manifest."""
    workers = workers if workers is not None else config.output.workers
    started = time.monotonic()
    if config.preset is not None:
        results = run_preset(config.preset, workers)
        default_dir = Path(config.output.directory) / config.preset
    else:
        results = _execute_explicit(config, workers)
        default_dir = Path(config.output.directory)
    results = _apply_polarization_convention(results,
                                             config.output.polarization_convention)
    manifest = {
        "config": config.raw,
        "version": __version__,
        "workers": workers,
        "polarization_convention": config.output.polarization_convention,
        "wall_time_s": round(time.monotonic() - started, 3),
    }
    return write_outputs(results, Path(out_dir or default_dir), manifest)


def _cmd_run(args) -> int:
    config = load_config(args.config)
    paths = run_experiment(config, out_dir=args.out, workers=args.workers)
    for p in paths:
        print(p)
    return 0


def _cmd_preset(args) -> int:
    if args.name not in PRESETS:
        raise ConfigError(f"unknown preset {args.name!r}; known: {sorted(PRESETS)}")
    config = ExperimentConfig(raw={"preset": args.name}, preset=args.name)
    out = args.out or Path("dcspin_results") / args.name
    paths = run_experiment(config, out_dir=out, workers=args.workers)
    for p in paths:
        print(p)
    return 0


def _cmd_verify(args) -> int:
    if args.name not in PRESETS:
        raise ConfigError(f"unknown preset {args.name!r}; known: {sorted(PRESETS)}")
    checks = verify_preset(args.name, workers=args.workers)
    failures = 0
    for check in checks:
        status = "PASS" if check.passed else "FAIL"
        failures += not check.passed
        print(f"[{status}] {args.name}: {check.name} ({check.tolerance}) -- {check.detail}")
    print(f"{args.name}: {len(checks) - failures}/{len(checks)} checks passed")
    return 1 if failures else 0


def _cmd_list_presets(_args) -> int:
    for name in sorted(PRESETS):
        print(f"{name:8s} {PRESETS[name].description}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dcspin",
        description="Electron-nuclear resonance experiments with switched driving",
    )
    parser.add_argument("--version", action="version", version=f"dcspin {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a JSON config")
    p_run.add_argument("config")
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.add_argument("--workers", type=int, default=None,
                       help="sweep workers (default: available parallelism)")
    p_run.set_defaults(func=_cmd_run)

    p_preset = sub.add_parser("preset", help="execute a named preset")
    p_preset.add_argument("name")
    p_preset.add_argument("--out", default=None)
    p_preset.add_argument("--workers", type=int, default=None)
    p_preset.set_defaults(func=_cmd_preset)

    p_verify = sub.add_parser("verify", help="run a preset and check its assertions")
    p_verify.add_argument("name")
    p_verify.add_argument("--workers", type=int, default=None)
    p_verify.set_defaults(func=_cmd_verify)

    p_list = sub.add_parser("list-presets", help="list available presets")
    p_list.set_defaults(func=_cmd_list_presets)
    return parser


def _error_record(exc: Exception) -> str:
    return json.dumps({"error": type(exc).__name__, "message": str(exc)})


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError, KeyError) as exc:
        print(_error_record(exc), file=sys.stderr)
        return 2
    except (PropagationError, QuadratureError, FactorizationError, ArithmeticError,
            np.linalg.LinAlgError) as exc:
        print(_error_record(exc), file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
