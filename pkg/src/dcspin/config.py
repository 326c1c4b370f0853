"""Experiment configuration: JSON schema, validation, unit ingestion.

Configs carry frequencies in linear units (MHz/kHz) and times in ms/ns; the
loader converts to angular frequencies and seconds.  A config contains
either a single ``preset`` name (plus an optional ``output`` block) or the
explicit blocks ``system``, ``protocol``, ``sweep`` and optionally
``integration`` and ``output``.  Keys starting with ``_`` are ignored
everywhere, which is the annotation mechanism for the example configs.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .constants import angular_from_khz, angular_from_mhz
from .dynamics import IntegrationPolicy
from .protocols import ProtocolSpec
from .spincore import Nucleus, SpinSystem, nucleus_from_isotope

SWEEP_AXES = ("nu_mhz", "total_time_ms", "detuning_mhz", "amplitude_error")
POLARIZATION_CONVENTIONS = ("doubled", "bare")


class ConfigError(ValueError):
    """Configuration file rejected; the message carries the field path."""


@dataclass(frozen=True)
class SweepPlan:
    axis: str
    start: float
    stop: float
    points: int
    total_time_ms: float | None = None
    nu_mhz: float | None = None
    detuning_mhz: float | str | None = None

    @property
    def grid_display(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.points)


@dataclass(frozen=True)
class OutputOptions:
    directory: str = "dcspin_results"
    polarization_convention: str = "doubled"
    workers: int | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    raw: dict
    preset: str | None = None
    system: SpinSystem | None = None
    protocol: ProtocolSpec | None = None
    sweep: SweepPlan | None = None
    policy: IntegrationPolicy = field(default_factory=IntegrationPolicy)
    output: OutputOptions = field(default_factory=OutputOptions)


def _clean(obj):
    """Drop annotation keys (leading underscore) recursively."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items() if not k.startswith("_")}
    if isinstance(obj, list):
        return [_clean(v) for v in obj]
    return obj


class _Block:
    """Dict wrapper producing field-path error messages."""

    def __init__(self, data: dict, path: str):
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: expected an object")
        self.data = data
        self.path = path

    def child(self, key: str) -> "_Block":
        return _Block(self.require(key, dict), f"{self.path}.{key}")

    def get(self, key: str, expected=None, default=None):
        if key not in self.data:
            return default
        value = self.data[key]
        if expected is not None and not isinstance(value, expected):
            names = expected if isinstance(expected, tuple) else (expected,)
            names = "/".join(t.__name__ for t in names)
            raise ConfigError(f"{self.path}.{key}: expected {names}, "
                              f"got {type(value).__name__}")
        return value

    def require(self, key: str, expected=None):
        if key not in self.data:
            raise ConfigError(f"{self.path}.{key}: required field is missing")
        return self.get(key, expected)

    def reject_unknown(self, known: set[str]) -> None:
        unknown = set(self.data) - known
        if unknown:
            raise ConfigError(f"{self.path}: unknown fields {sorted(unknown)}")


_NUMBER = (int, float)


def _parse_nucleus(block: _Block) -> Nucleus:
    block.reject_unknown({"isotope", "gyromagnetic_mhz_per_tesla",
                          "hyperfine_x_khz", "hyperfine_z_khz", "label"})
    ax = angular_from_khz(block.require("hyperfine_x_khz", _NUMBER))
    az = angular_from_khz(block.require("hyperfine_z_khz", _NUMBER))
    gamma_mhz = block.get("gyromagnetic_mhz_per_tesla", _NUMBER)
    isotope = block.get("isotope", str)
    label = block.get("label", str, default=isotope or "")
    if gamma_mhz is not None:
        return Nucleus(angular_from_mhz(gamma_mhz), ax, az, label=label)
    if isotope is None:
        raise ConfigError(f"{block.path}: needs isotope or gyromagnetic_mhz_per_tesla")
    try:
        return nucleus_from_isotope(isotope, ax, az)
    except KeyError as exc:
        raise ConfigError(f"{block.path}.isotope: {exc.args[0]}") from None


def _parse_system(block: _Block) -> SpinSystem:
    block.reject_unknown({"field_tesla", "nuclei"})
    field_z = block.require("field_tesla", _NUMBER)
    nuclei_raw = block.require("nuclei", list)
    nuclei = tuple(
        _parse_nucleus(_Block(n, f"{block.path}.nuclei[{i}]"))
        for i, n in enumerate(nuclei_raw)
    )
    return SpinSystem(field_z=field_z, nuclei=nuclei)


def _parse_protocol(block: _Block) -> ProtocolSpec:
    kind = block.require("kind", str)
    common = {"kind", "initial_state", "amplitude_error", "measured"}
    per_kind = {
        "dcs": {"rabi_mhz", "switch_fraction", "t_initial", "reset_every_ms"},
        "pm": {"omega0_mhz", "omega1_mhz"},
        "topdnp": {"rabi_mhz", "pulse_len_ns", "delay_ns"},
        "constant": {"omega_e_mhz"},
    }
    if kind not in per_kind:
        raise ConfigError(f"{block.path}.kind: unknown protocol {kind!r}")
    block.reject_unknown(common | per_kind[kind])
    kwargs: dict = {
        "kind": kind,
        "amplitude_error": block.get("amplitude_error", _NUMBER, default=0.0),
    }
    default_init = "topdnp_parallel" if kind == "topdnp" else "sensing"
    kwargs["initial_state_kind"] = block.get("initial_state", str, default=default_init)
    measured = block.get("measured", list, default=[])
    if not all(isinstance(m, str) for m in measured):
        raise ConfigError(f"{block.path}.measured: expected a list of column names")
    kwargs["measured"] = tuple(measured)
    try:
        if kind == "dcs":
            kwargs["omega_max"] = angular_from_mhz(block.require("rabi_mhz", _NUMBER))
            kwargs["switch_fraction"] = block.get("switch_fraction", _NUMBER, default=0.0)
            t_initial = block.get("t_initial", default="symmetric")
            if not isinstance(t_initial, (str, int, float)):
                raise ConfigError(f"{block.path}.t_initial: expected string or number")
            kwargs["t_initial"] = t_initial
            reset_ms = block.get("reset_every_ms", _NUMBER)
            kwargs["reset_every"] = None if reset_ms is None else reset_ms * 1e-3
        elif kind == "pm":
            kwargs["omega0"] = angular_from_mhz(block.require("omega0_mhz", _NUMBER))
            kwargs["omega1"] = angular_from_mhz(block.require("omega1_mhz", _NUMBER))
        elif kind == "topdnp":
            kwargs["rabi"] = angular_from_mhz(block.require("rabi_mhz", _NUMBER))
            kwargs["pulse_len"] = block.require("pulse_len_ns", _NUMBER) * 1e-9
            kwargs["delay"] = block.require("delay_ns", _NUMBER) * 1e-9
        else:
            kwargs["omega_e"] = angular_from_mhz(block.require("omega_e_mhz", _NUMBER))
        return ProtocolSpec(**kwargs)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{block.path}: {exc}") from None


def _parse_sweep(block: _Block, kind: str) -> SweepPlan:
    block.reject_unknown({"axis", "start", "stop", "points", "total_time_ms",
                          "nu_mhz", "detuning_mhz"})
    axis = block.require("axis", str)
    if axis not in SWEEP_AXES:
        raise ConfigError(f"{block.path}.axis: must be one of {SWEEP_AXES}")
    points = block.require("points", int)
    if points < 2:
        raise ConfigError(f"{block.path}.points: need at least 2 sweep points")
    detuning = block.get("detuning_mhz", (int, float, str))
    if isinstance(detuning, str) and detuning != "auto":
        raise ConfigError(f"{block.path}.detuning_mhz: a number or the string 'auto'")
    plan = SweepPlan(
        axis=axis,
        start=float(block.require("start", _NUMBER)),
        stop=float(block.require("stop", _NUMBER)),
        points=points,
        total_time_ms=block.get("total_time_ms", _NUMBER),
        nu_mhz=block.get("nu_mhz", _NUMBER),
        detuning_mhz=detuning,
    )
    if axis != "total_time_ms" and plan.total_time_ms is None:
        raise ConfigError(f"{block.path}.total_time_ms: required for axis {axis!r}")
    if axis == "nu_mhz" and kind not in ("dcs", "pm"):
        raise ConfigError(f"{block.path}.axis: nu_mhz applies to dcs/pm, not {kind!r}")
    if axis == "detuning_mhz" and kind != "topdnp":
        raise ConfigError(f"{block.path}.axis: detuning_mhz applies to topdnp only")
    if axis in ("total_time_ms", "amplitude_error"):
        if kind in ("dcs", "pm") and plan.nu_mhz is None:
            raise ConfigError(f"{block.path}.nu_mhz: required for a {axis} sweep "
                              f"of {kind!r}")
        if kind == "topdnp" and plan.detuning_mhz is None:
            raise ConfigError(f"{block.path}.detuning_mhz: required for a {axis} "
                              "sweep of 'topdnp' (a number, or 'auto')")
    return plan


def _parse_integration(block: _Block) -> IntegrationPolicy:
    block.reject_unknown({"max_step_ns", "ramp_substeps", "unitarity_check_interval",
                          "tolerance", "fast_forward"})
    max_step_ns = block.get("max_step_ns", _NUMBER)
    try:
        return IntegrationPolicy(
            max_step=None if max_step_ns is None else max_step_ns * 1e-9,
            ramp_substeps=block.get("ramp_substeps", int, default=32),
            unitarity_check_interval=block.get("unitarity_check_interval", int,
                                               default=1000),
            tolerance=block.get("tolerance", _NUMBER, default=1e-9),
            fast_forward=block.get("fast_forward", bool, default=True),
        )
    except ValueError as exc:
        raise ConfigError(f"{block.path}: {exc}") from None


def _parse_output(block: _Block) -> OutputOptions:
    block.reject_unknown({"directory", "polarization_convention", "workers"})
    convention = block.get("polarization_convention", str, default="doubled")
    if convention not in POLARIZATION_CONVENTIONS:
        raise ConfigError(f"{block.path}.polarization_convention: must be one of "
                          f"{POLARIZATION_CONVENTIONS}")
    return OutputOptions(
        directory=block.get("directory", str, default="dcspin_results"),
        polarization_convention=convention,
        workers=block.get("workers", int),
    )


def parse_config(data: dict, source: str = "config") -> ExperimentConfig:
    """Validate and resolve an already-parsed config dict."""
    raw = data
    data = _clean(data)
    root = _Block(data, source)
    root.reject_unknown({"preset", "system", "protocol", "sweep", "integration",
                         "output"})
    preset = root.get("preset", str)
    explicit = {"system", "protocol", "sweep", "integration"} & set(data)
    if preset is not None and explicit:
        raise ConfigError(f"{source}: give either 'preset' or explicit blocks, not both")
    output = _parse_output(root.child("output")) if "output" in data else OutputOptions()
    if preset is not None:
        from .presets import PRESETS  # deferred: presets imports protocols
        if preset not in PRESETS:
            raise ConfigError(f"{source}.preset: unknown preset {preset!r}; "
                              f"known: {sorted(PRESETS)}")
        return ExperimentConfig(raw=raw, preset=preset, output=output)
    for block_name in ("system", "protocol", "sweep"):
        if block_name not in data:
            raise ConfigError(f"{source}.{block_name}: required block is missing "
                              "(or use 'preset')")
    protocol = _parse_protocol(root.child("protocol"))
    return ExperimentConfig(
        raw=raw,
        system=_parse_system(root.child("system")),
        protocol=protocol,
        sweep=_parse_sweep(root.child("sweep"), protocol.kind),
        policy=(_parse_integration(root.child("integration"))
                if "integration" in data else IntegrationPolicy()),
        output=output,
    )


def load_config(path: str | Path) -> ExperimentConfig:
    """Load and validate a JSON config file.

    Raises ConfigError with line/column on parse failures and with the
    offending field path on schema violations.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}: JSON parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return parse_config(data, source=str(path))
