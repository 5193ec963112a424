"""Monte Carlo of the two-target proton teleportation layout.

Per event: an LH2 pp scattering at 90 deg c.m. makes a (p3, p2) pair; p3
meets a polarized proton p1 in the PH2 target where a 90 deg c.m. collision
projects (p1, p3) onto the Bell basis; singlet events fire F-1. p2 carries
the post-selected spin through K into the carbon analyzer C, whose left/right
deflection is recorded by F-2.

The three-qubit register is ordered (p1, p3, p2).
"""

from __future__ import annotations

import functools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import quantum as qc
from .analysis import RunSummary, analyze_events, is_causal
from .kinematics import BeamSpec, solve_elastic, time_of_flight

log = logging.getLogger(__name__)

LEFT = "Left"
RIGHT = "Right"

FLIGHT_NEGLECTED = "paper_simplified"
WITH_TOF = "with_tof"
TIMING_MODES = (FLIGHT_NEGLECTED, WITH_TOF)

SCATTER_CM_DEG = 90.0


class ConfigurationError(ValueError):
    pass


def _vec(v, name: str) -> tuple:
    arr = np.asarray(v, dtype=float)
    if arr.shape != (3,) or not np.all(np.isfinite(arr)):
        raise ConfigurationError(f"{name} must be a finite 3-vector, got {v!r}")
    return tuple(float(x) for x in arr)


def _default_layout():
    # PH2 and K on symmetric 45 deg legs, 3 m apart; beam along +z
    u_ph2 = np.array([1.0, 0.0, 1.0]) / math.sqrt(2)
    u_k = np.array([-1.0, 0.0, 1.0]) / math.sqrt(2)
    ph2 = np.array([1.5, 0.0, 1.5])
    k = np.array([-1.5, 0.0, 1.5])
    c = k + 0.5 * u_k
    return {
        "lh2": (0.0, 0.0, 0.0),
        "ph2": tuple(ph2),
        "k": tuple(k),
        "c": tuple(c),
        "f1": tuple(ph2 + 0.5 * u_ph2),
        "f2": tuple(c + 0.5 * u_k),
    }


_DEFAULTS = _default_layout()


@dataclass(frozen=True)
class GeometryConfig:
    """Target and detector positions in metres.

    ``separation_s_m`` defaults to |PH2 - K| when left as None.
    ``f2_lateral_offset_m`` is how far a left/right deflection lands from the
    F-2 centre.
    """

    lh2: tuple = _DEFAULTS["lh2"]
    ph2: tuple = _DEFAULTS["ph2"]
    k: tuple = _DEFAULTS["k"]
    c: tuple = _DEFAULTS["c"]
    f1: tuple = _DEFAULTS["f1"]
    f2: tuple = _DEFAULTS["f2"]
    separation_s_m: Optional[float] = None
    f2_lateral_offset_m: float = 0.1

    def __post_init__(self):
        names = ("lh2", "ph2", "k", "c", "f1", "f2")
        for name in names:
            object.__setattr__(self, name, _vec(getattr(self, name), name))
        for i, a in enumerate(names):
            for b in names[i + 1 :]:
                if getattr(self, a) == getattr(self, b):
                    raise ConfigurationError(f"positions {a} and {b} coincide")
        if self.separation_s_m is not None and not self.separation_s_m > 0:
            raise ConfigurationError(f"separation_s_m must be > 0, got {self.separation_s_m}")
        if self.f2_lateral_offset_m < 0:
            raise ConfigurationError("f2_lateral_offset_m must be >= 0")

    @property
    def separation(self) -> float:
        if self.separation_s_m is not None:
            return float(self.separation_s_m)
        return self.ph2_k_distance

    @property
    def ph2_k_distance(self) -> float:
        return _dist(self.ph2, self.k)

    @property
    def f1_f2_distance(self) -> float:
        return _dist(self.f1, self.f2)


def _dist(a, b) -> float:
    return float(np.linalg.norm(np.subtract(a, b)))


@dataclass(frozen=True)
class AnalyzerSpec:
    analyzing_power: float = 0.5
    analyzer_axis: tuple = (0.0, 1.0, 0.0)

    def __post_init__(self):
        if not -1.0 <= self.analyzing_power <= 1.0:
            raise ConfigurationError(
                f"analyzing_power must be in [-1, 1], got {self.analyzing_power}"
            )
        try:
            axis = qc.as_axis(self.analyzer_axis)
        except qc.InvalidAxisError as exc:
            raise ConfigurationError(str(exc)) from None
        object.__setattr__(self, "analyzer_axis", tuple(float(x) for x in axis))

    def p_left(self, bloch) -> float:
        return (1 + self.analyzing_power * float(np.dot(bloch, self.analyzer_axis))) / 2


@dataclass(frozen=True)
class SourceSpec:
    ph2_polarization: tuple = (0.0, 0.8, 0.0)
    channel: qc.ChannelSpec = qc.ChannelSpec(0.97)
    beam: BeamSpec = BeamSpec(30.0)

    def __post_init__(self):
        pol = _vec(self.ph2_polarization, "ph2_polarization")
        norm = math.hypot(*pol)
        if not 0 < norm <= 1 + qc.UNIT_TOL:
            raise ConfigurationError(f"ph2_polarization norm must be in (0, 1], got {norm}")
        object.__setattr__(self, "ph2_polarization", pol)
        if not isinstance(self.channel, qc.ChannelSpec):
            object.__setattr__(self, "channel", qc.ChannelSpec(self.channel))
        if not isinstance(self.beam, BeamSpec):
            object.__setattr__(self, "beam", BeamSpec(self.beam))


@dataclass(frozen=True)
class TimingSpec:
    """How detector timestamps are formed.

    Event ``i`` scatters in LH2 at ``i * event_spacing_s``. ``jitter_s`` is a
    gaussian clock resolution; the delays model constant cable offsets.
    """

    mode: str = WITH_TOF
    event_spacing_s: float = 1e-6
    jitter_s: float = 0.0
    f1_delay_s: float = 0.0
    f2_delay_s: float = 0.0

    def __post_init__(self):
        if self.mode not in TIMING_MODES:
            raise ConfigurationError(f"timing mode must be one of {TIMING_MODES}, got {self.mode!r}")
        if not self.event_spacing_s > 0:
            raise ConfigurationError("event_spacing_s must be > 0")
        if self.jitter_s < 0:
            raise ConfigurationError("jitter_s must be >= 0")
        if self.f1_delay_s < 0 or self.f2_delay_s < 0:
            raise ConfigurationError("detector delays must be >= 0")


@dataclass(frozen=True)
class EventRecord:
    event_id: int
    accepted: bool
    lr: Optional[str]
    t_f1_s: float
    t_f2_s: float
    f1_hit_m: tuple
    f2_hit_m: tuple
    causal_separate: bool
    teleported_bloch: tuple
    rng_draws: tuple = field(default=(), compare=False)


@functools.lru_cache(maxsize=64)
def _register(polarization: tuple, singlet_fraction: float) -> qc.DensityOperator:
    return qc.teleport_input(polarization, singlet_fraction)


@functools.lru_cache(maxsize=64)
def _flight_plan(beam_mev: float):
    """Speeds of p3/p2 out of LH2 and of the particle F-1 sees after PH2."""
    first = solve_elastic(BeamSpec(beam_mev), SCATTER_CM_DEG)
    second = solve_elastic(BeamSpec(first.t_out_mev), SCATTER_CM_DEG)
    return first.beta_out, first.beta_recoil, second.beta_out


def _lateral(geometry: GeometryConfig, analyzer: AnalyzerSpec) -> np.ndarray:
    leg = np.subtract(geometry.c, geometry.k)
    side = np.cross(analyzer.analyzer_axis, leg)
    n = np.linalg.norm(side)
    if n == 0:
        return np.zeros(3)
    return side / n


def event_rng(master_seed: int, event_id: int) -> np.random.Generator:
    """Independent generator for one event, fixed by (seed, event id) alone."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(master_seed, spawn_key=(event_id,))))


def generate_event(
    event_id: int,
    source: SourceSpec,
    geometry: GeometryConfig,
    analyzer: AnalyzerSpec,
    timing: TimingSpec,
    rng: np.random.Generator,
    postselect: bool = True,
) -> EventRecord:
    """Simulate one teleportation attempt.

    With ``postselect=False`` every Bell outcome is kept and p2 is analyzed
    in whatever state that outcome left it; this is the diagnostic that shows
    the pair alone carries no signal.
    """
    u_bell, u_lr = rng.random(2)
    jitter = rng.standard_normal(2) * timing.jitter_s

    register = _register(source.ph2_polarization, source.channel.singlet_fraction)
    outcome, collapsed, _ = qc.bell_measure(register, (0, 1), float(u_bell))
    p2 = qc.partial_trace(collapsed, [2])
    bloch = tuple(float(x) for x in qc.bloch_of(p2))

    accepted = outcome is qc.BellOutcome.PsiMinus or not postselect
    lr = None
    f2_hit = np.asarray(geometry.f2)
    if accepted:
        lr = LEFT if u_lr < analyzer.p_left(bloch) else RIGHT
        sign = 1.0 if lr == LEFT else -1.0
        f2_hit = f2_hit + sign * geometry.f2_lateral_offset_m * _lateral(geometry, analyzer)

    t0 = event_id * timing.event_spacing_s
    t_f1 = t_f2 = t0
    if timing.mode == WITH_TOF:
        beta3, beta2, beta3_after = _flight_plan(source.beam.kinetic_energy_mev)
        t_f1 += time_of_flight(_dist(geometry.lh2, geometry.ph2), beta3)
        t_f1 += time_of_flight(_dist(geometry.ph2, geometry.f1), beta3_after)
        t_f2 += time_of_flight(
            _dist(geometry.lh2, geometry.k) + _dist(geometry.k, geometry.c) + _dist(geometry.c, f2_hit),
            beta2,
        )
    t_f1 = max(0.0, t_f1 + timing.f1_delay_s + float(jitter[0]))
    t_f2 = max(0.0, t_f2 + timing.f2_delay_s + float(jitter[1]))

    return EventRecord(
        event_id=event_id,
        accepted=accepted,
        lr=lr,
        t_f1_s=t_f1,
        t_f2_s=t_f2,
        f1_hit_m=geometry.f1,
        f2_hit_m=tuple(float(x) for x in f2_hit),
        causal_separate=is_causal(geometry.separation, abs(t_f1 - t_f2)),
        teleported_bloch=bloch,
        rng_draws=(float(u_bell), float(u_lr), float(jitter[0]), float(jitter[1])),
    )


@dataclass(frozen=True)
class SimulationSetup:
    source: SourceSpec = SourceSpec()
    geometry: GeometryConfig = GeometryConfig()
    analyzer: AnalyzerSpec = AnalyzerSpec()
    timing: TimingSpec = TimingSpec()
    postselect: bool = True


def _generate_range(args) -> list:
    setup, master_seed, start, stop = args
    return [
        generate_event(
            i,
            setup.source,
            setup.geometry,
            setup.analyzer,
            setup.timing,
            event_rng(master_seed, i),
            postselect=setup.postselect,
        )
        for i in range(start, stop)
    ]


def generate_events(
    n_events: int, master_seed: int, setup: SimulationSetup, workers: int = 1
) -> list:
    """Events 0..n-1 in id order; identical for any worker count."""
    if n_events <= 0:
        raise ConfigurationError(f"n_events must be > 0, got {n_events}")
    if workers <= 1:
        return _generate_range((setup, master_seed, 0, n_events))
    chunk = math.ceil(n_events / (4 * workers))
    jobs = [
        (setup, master_seed, s, min(s + chunk, n_events)) for s in range(0, n_events, chunk)
    ]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_generate_range, jobs))
    return [ev for part in parts for ev in part]


def run_simulation(
    n_events: int,
    master_seed: int,
    setup: SimulationSetup = SimulationSetup(),
    window_s: float = 100e-9,
    causal_only: bool = False,
    workers: int = 1,
) -> tuple[list, RunSummary]:
    events = generate_events(n_events, master_seed, setup, workers=workers)
    summary = analyze_events(
        events,
        window_s=window_s,
        separation_s_m=setup.geometry.separation,
        analyzing_power=setup.analyzer.analyzing_power,
        causal_only=causal_only,
    )
    log.info("simulated %d events, %d accepted", n_events, summary.n_accepted)
    return events, summary


def expected_left_probability(setup: SimulationSetup) -> float:
    """P(Left) for a post-selected event, straight from the density operator."""
    out, _ = qc.postselected_output(setup.source.ph2_polarization, setup.source.channel)
    return setup.analyzer.p_left(qc.bloch_of(out))


def acceptance_probability(source: SourceSpec) -> float:
    """Singlet overlap of the (p1, p3) pair."""
    pair = qc.partial_trace(
        _register(source.ph2_polarization, source.channel.singlet_fraction), [0, 1]
    )
    return qc.expectation(pair, qc.SINGLET)

