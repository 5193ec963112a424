"""Flat ``key = value`` run configuration.

Units live in the key names. Every physical default here is a placeholder
chosen for the simulator; the only externally motivated number is the beam
energy, which sits inside the 20-50 MeV window proposed for the experiment.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Optional

from . import quantum as qc
from .experiment import (
    TIMING_MODES,
    WITH_TOF,
    AnalyzerSpec,
    ConfigurationError,
    GeometryConfig,
    SimulationSetup,
    SourceSpec,
    TimingSpec,
    _DEFAULTS,
)
from .kinematics import BeamSpec


class ConfigError(ValueError):
    def __init__(self, message: str, key: Optional[str] = None, line: Optional[int] = None):
        where = []
        if key is not None:
            where.append(f"key {key!r}")
        if line is not None:
            where.append(f"line {line}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.key = key
        self.line = line


def _opt(default, kind: str, doc: str):
    return field(default=default, metadata={"kind": kind, "doc": doc})


@dataclass(frozen=True)
class RunConfig:
    beam_energy_mev: float = _opt(30.0, "float", "beam kinetic energy; inside the proposed 20-50 MeV window")
    singlet_fraction: float = _opt(0.97, "float", "placeholder: singlet weight of the LH2 pair")
    ph2_polarization: tuple = _opt((0.0, 0.8, 0.0), "vec", "placeholder: PH2 target polarization")
    analyzing_power: float = _opt(0.5, "float", "placeholder: carbon analyzing power A_y")
    analyzer_axis: tuple = _opt((0.0, 1.0, 0.0), "vec", "placeholder: analyzer normal")
    lh2_position_m: tuple = _opt(_DEFAULTS["lh2"], "vec", "placeholder geometry")
    ph2_position_m: tuple = _opt(_DEFAULTS["ph2"], "vec", "placeholder geometry (x0)")
    k_position_m: tuple = _opt(_DEFAULTS["k"], "vec", "placeholder geometry (x1)")
    c_position_m: tuple = _opt(_DEFAULTS["c"], "vec", "placeholder geometry")
    f1_position_m: tuple = _opt(_DEFAULTS["f1"], "vec", "placeholder geometry")
    f2_position_m: tuple = _opt(_DEFAULTS["f2"], "vec", "placeholder geometry")
    separation_s_m: Optional[float] = _opt(None, "optfloat", "causal distance S; auto = |PH2 - K| (3 m by default)")
    f2_lateral_offset_m: float = _opt(0.1, "float", "placeholder: left/right hit offset at F-2")
    timing_mode: str = _opt(WITH_TOF, "mode", "with_tof, or paper_simplified to ignore flight times")
    event_spacing_s: float = _opt(1e-6, "float", "time between successive LH2 scatterings")
    timing_jitter_s: float = _opt(0.0, "float", "gaussian clock resolution (ideal clocks by default)")
    f1_delay_s: float = _opt(0.0, "float", "constant F-1 cable delay")
    f2_delay_s: float = _opt(0.0, "float", "constant F-2 cable delay")
    n_events: int = _opt(100_000, "int", "events to simulate")
    master_seed: int = _opt(20_000_101, "int", "seed for every random draw")
    coincidence_window_s: float = _opt(100e-9, "float", "F-1/F-2 pairing window")
    causal_only: bool = _opt(False, "bool", "keep only causally separate coincidences")
    postselect: bool = _opt(True, "bool", "false keeps all Bell outcomes (no-signaling diagnostic)")
    workers: int = _opt(1, "int", "worker processes for event generation")
    events_path: str = _opt("events.csv", "str", "event file written by simulate")
    report_path: str = _opt("-", "str", "summary report path, '-' for stdout")

    def __post_init__(self):
        for f in dataclasses.fields(self):
            _check_field(f, getattr(self, f.name))
        try:
            self.setup()
        except (ConfigurationError, qc.QuantumError, ValueError) as exc:
            raise ConfigError(f"invalid configuration: {exc}") from None

    def setup(self) -> SimulationSetup:
        return SimulationSetup(
            source=SourceSpec(
                ph2_polarization=self.ph2_polarization,
                channel=qc.ChannelSpec(self.singlet_fraction),
                beam=BeamSpec(self.beam_energy_mev),
            ),
            geometry=GeometryConfig(
                lh2=self.lh2_position_m,
                ph2=self.ph2_position_m,
                k=self.k_position_m,
                c=self.c_position_m,
                f1=self.f1_position_m,
                f2=self.f2_position_m,
                separation_s_m=self.separation_s_m,
                f2_lateral_offset_m=self.f2_lateral_offset_m,
            ),
            analyzer=AnalyzerSpec(self.analyzing_power, self.analyzer_axis),
            timing=TimingSpec(
                mode=self.timing_mode,
                event_spacing_s=self.event_spacing_s,
                jitter_s=self.timing_jitter_s,
                f1_delay_s=self.f1_delay_s,
                f2_delay_s=self.f2_delay_s,
            ),
            postselect=self.postselect,
        )

    def replace(self, **changes) -> RunConfig:
        return dataclasses.replace(self, **changes)


_RANGES = {
    "beam_energy_mev": (0.0, math.inf, False),
    "singlet_fraction": (0.0, 1.0, True),
    "analyzing_power": (-1.0, 1.0, True),
    "separation_s_m": (0.0, math.inf, False),
    "coincidence_window_s": (0.0, math.inf, False),
    "event_spacing_s": (0.0, math.inf, False),
    "timing_jitter_s": (0.0, math.inf, True),
    "f1_delay_s": (0.0, math.inf, True),
    "f2_delay_s": (0.0, math.inf, True),
    "f2_lateral_offset_m": (0.0, math.inf, True),
    "n_events": (0, math.inf, False),
    "workers": (1, math.inf, True),
    "master_seed": (0, 2**64 - 1, True),
}


def _check_field(f: dataclasses.Field, value) -> None:
    if f.name in _RANGES and value is not None:
        lo, hi, closed = _RANGES[f.name]
        ok = lo <= value <= hi if closed else lo < value <= hi
        if not ok:
            bracket = f"[{lo}, {hi}]" if closed else f"({lo}, {hi}]"
            raise ConfigError(f"value {value!r} out of range {bracket}", key=f.name)
    if f.metadata["kind"] == "mode" and value not in TIMING_MODES:
        raise ConfigError(f"must be one of {', '.join(TIMING_MODES)}", key=f.name)


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _parse_value(kind: str, raw: str):
    if kind == "float":
        v = float(raw)
        if not math.isfinite(v):
            raise ValueError("not a finite number")
        return v
    if kind == "optfloat":
        return None if raw.lower() == "auto" else _parse_value("float", raw)
    if kind == "int":
        return int(raw)
    if kind == "bool":
        low = raw.lower()
        if low in ("true", "yes", "1"):
            return True
        if low in ("false", "no", "0"):
            return False
        raise ValueError(f"expected true/false, got {raw!r}")
    if kind == "vec":
        parts = [p.strip() for p in raw.split(",")]
        if len(parts) != 3:
            raise ValueError(f"expected three comma-separated numbers, got {raw!r}")
        return tuple(_parse_value("float", p) for p in parts)
    return raw


def parse_config(text: str, base: Optional[RunConfig] = None) -> RunConfig:
    """Parse ``key = value`` lines ('#' starts a comment) over the defaults."""
    values = {}
    seen_at = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", line=lineno)
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in _FIELDS:
            raise ConfigError("unknown key", key=key, line=lineno)
        if key in seen_at:
            raise ConfigError(f"duplicate key (first set on line {seen_at[key]})", key=key, line=lineno)
        try:
            value = _parse_value(_FIELDS[key].metadata["kind"], raw)
        except ValueError as exc:
            raise ConfigError(f"malformed value: {exc}", key=key, line=lineno) from None
        try:
            _check_field(_FIELDS[key], value)
        except ConfigError as exc:
            raise ConfigError(str(exc).split(": ", 1)[1], key=key, line=lineno) from None
        values[key] = value
        seen_at[key] = lineno
    return dataclasses.replace(base or RunConfig(), **values)


def _format_value(value) -> str:
    if value is None:
        return "auto"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_config(config: RunConfig, comments: bool = False) -> str:
    lines = []
    for f in dataclasses.fields(config):
        line = f"{f.name} = {_format_value(getattr(config, f.name))}"
        if comments:
            line += f"  # {f.metadata['doc']}"
        lines.append(line)
    return "\n".join(lines) + "\n"


def load_config(path: Optional[str]) -> RunConfig:
    if path is None:
        return RunConfig()
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
