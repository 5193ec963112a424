"""Classical-channel side: coincidence building, causal cuts and estimators.

Undefined estimators (empty samples, zero analyzing power) are ``None``,
never zero or NaN.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .kinematics import SPEED_OF_LIGHT

F1 = "F1"
F2 = "F2"

DEFAULT_WINDOW_S = 100e-9
# |dt| values closer than this count as a tie (well below any clock resolution)
TIE_TOLERANCE_S = 1e-15


class OrderingError(ValueError):
    pass


@dataclass(frozen=True)
class DetectorRecord:
    timestamp_s: float
    hit_position_m: tuple
    event_id: int = -1
    lr: Optional[str] = None


@dataclass(frozen=True)
class DetectorStream:
    detector_id: str
    records: tuple

    def __post_init__(self):
        if self.detector_id not in (F1, F2):
            raise ValueError(f"unknown detector {self.detector_id!r}")
        records = tuple(self.records)
        for prev, cur in zip(records, records[1:]):
            if cur.timestamp_s < prev.timestamp_s:
                raise OrderingError(
                    f"{self.detector_id} stream not sorted at t={cur.timestamp_s!r} "
                    f"(follows {prev.timestamp_s!r})"
                )
        object.__setattr__(self, "records", records)

    @classmethod
    def sorted(cls, detector_id: str, records: Iterable[DetectorRecord]) -> DetectorStream:
        return cls(detector_id, tuple(sorted(records, key=lambda r: (r.timestamp_s, r.event_id))))

    def __len__(self):
        return len(self.records)


@dataclass(frozen=True)
class CoincidencePair:
    f1_record: DetectorRecord
    f2_record: DetectorRecord
    t12_s: float
    causal_separate: Optional[bool] = None


def is_causal(separation_s_m: float, t12_s: float) -> bool:
    """Space-like separation: strictly S > c * t12."""
    return separation_s_m > SPEED_OF_LIGHT * t12_s


def classify_causal(pair: CoincidencePair, separation_s_m: float) -> bool:
    if not separation_s_m > 0:
        raise ValueError(f"separation must be > 0, got {separation_s_m}")
    return is_causal(separation_s_m, pair.t12_s)


def build_coincidences(
    f1: DetectorStream,
    f2: DetectorStream,
    window_s: float = DEFAULT_WINDOW_S,
    separation_s_m: Optional[float] = None,
) -> list:
    """Greedy nearest-in-time matching, walking F-2 in time order.

    Each F-2 record takes the closest still-unused F-1 record with
    |dt| <= window_s; on a tie the earlier F-1 record wins. When
    ``separation_s_m`` is given each pair is also classified as causal or not.
    """
    if not window_s > 0:
        raise ValueError(f"window must be > 0, got {window_s}")
    for stream, want in ((f1, F1), (f2, F2)):
        if stream.detector_id != want:
            raise ValueError(f"expected a {want} stream, got {stream.detector_id}")
    times = [r.timestamp_s for r in f1.records]
    used = [False] * len(times)
    pairs = []
    for rec in f2.records:
        t = rec.timestamp_s
        best, best_dt = None, None
        k = bisect.bisect_left(times, t - window_s)
        while k < len(times) and times[k] <= t + window_s:
            if not used[k]:
                dt = abs(t - times[k])
                if best is None or dt < best_dt - TIE_TOLERANCE_S:
                    best, best_dt = k, dt
            k += 1
        if best is None:
            continue
        used[best] = True
        causal = None if separation_s_m is None else is_causal(separation_s_m, best_dt)
        pairs.append(CoincidencePair(f1.records[best], rec, best_dt, causal))
    return pairs


@dataclass(frozen=True)
class Tally:
    """Mergeable counts behind a RunSummary."""

    n_total: int = 0
    n_left: int = 0
    n_right: int = 0
    n_causal: int = 0

    def __add__(self, other: Tally) -> Tally:
        return Tally(
            self.n_total + other.n_total,
            self.n_left + other.n_left,
            self.n_right + other.n_right,
            self.n_causal + other.n_causal,
        )


@dataclass(frozen=True)
class RunSummary:
    n_total: int
    n_accepted: int
    n_left: int
    n_right: int
    n_causal: int
    asymmetry: Optional[float]
    asymmetry_error: Optional[float]
    acceptance_rate: Optional[float]
    estimated_polarization: Optional[float]
    estimated_polarization_error: Optional[float]
    chsh_value: Optional[float] = None

    @classmethod
    def from_tally(
        cls, tally: Tally, analyzing_power: Optional[float] = None, chsh_value=None
    ) -> RunSummary:
        n_acc = tally.n_left + tally.n_right
        asym = err = rate = pol = pol_err = None
        if n_acc > 0:
            asym = (tally.n_left - tally.n_right) / n_acc
            err = math.sqrt((1 - asym * asym) / n_acc)
            if analyzing_power:
                pol = asym / analyzing_power
                pol_err = err / abs(analyzing_power)
        if tally.n_total > 0:
            rate = n_acc / tally.n_total
        return cls(
            n_total=tally.n_total,
            n_accepted=n_acc,
            n_left=tally.n_left,
            n_right=tally.n_right,
            n_causal=tally.n_causal,
            asymmetry=asym,
            asymmetry_error=err,
            acceptance_rate=rate,
            estimated_polarization=pol,
            estimated_polarization_error=pol_err,
            chsh_value=chsh_value,
        )


def tally_pairs(
    pairs: Sequence[CoincidencePair],
    causal_only: bool = False,
    n_total: Optional[int] = None,
    separation_s_m: Optional[float] = None,
) -> Tally:
    """Count left/right coincidences.

    Causality comes from ``separation_s_m`` if given, else from the flag each
    pair already carries. Pairs whose F-2 record has no left/right tag are
    skipped.
    """
    n_left = n_right = n_causal = 0
    for pair in pairs:
        if pair.f2_record.lr is None:
            continue
        if separation_s_m is not None:
            causal = classify_causal(pair, separation_s_m)
        elif pair.causal_separate is None:
            raise ValueError("pair has no causal classification and no separation was given")
        else:
            causal = pair.causal_separate
        n_causal += causal
        if causal_only and not causal:
            continue
        if pair.f2_record.lr == "Left":
            n_left += 1
        else:
            n_right += 1
    return Tally(n_total if n_total is not None else 0, n_left, n_right, n_causal)


def summarize(
    pairs: Sequence[CoincidencePair],
    causal_only: bool = False,
    analyzing_power: Optional[float] = None,
    n_total: Optional[int] = None,
    separation_s_m: Optional[float] = None,
) -> RunSummary:
    tally = tally_pairs(pairs, causal_only, n_total, separation_s_m)
    return RunSummary.from_tally(tally, analyzing_power)


def streams_from_events(events: Iterable) -> tuple[DetectorStream, DetectorStream]:
    """Split event records into F-1 and F-2 detector streams.

    F-1 fires only for kept (singlet) events; every p2 reaches F-2, so the F-2
    stream holds one record per event.
    """
    f1, f2 = [], []
    for ev in events:
        if ev.accepted:
            f1.append(DetectorRecord(ev.t_f1_s, tuple(ev.f1_hit_m), ev.event_id, ev.lr))
        f2.append(DetectorRecord(ev.t_f2_s, tuple(ev.f2_hit_m), ev.event_id, ev.lr))
    return DetectorStream.sorted(F1, f1), DetectorStream.sorted(F2, f2)


def analyze_streams(
    f1: DetectorStream,
    f2: DetectorStream,
    window_s: float,
    separation_s_m: float,
    analyzing_power: Optional[float],
    causal_only: bool = False,
) -> RunSummary:
    pairs = build_coincidences(f1, f2, window_s, separation_s_m)
    return summarize(pairs, causal_only, analyzing_power, n_total=len(f2))


def analyze_events(
    events: Sequence,
    window_s: float,
    separation_s_m: float,
    analyzing_power: Optional[float],
    causal_only: bool = False,
) -> RunSummary:
    f1, f2 = streams_from_events(events)
    return analyze_streams(f1, f2, window_s, separation_s_m, analyzing_power, causal_only)


# ---- Bell-test mode -------------------------------------------------------

# settings order: (a, b), (a, b'), (a', b), (a', b')
CHSH_SIGNS = (1, -1, 1, 1)


def _setting_correlations(counts) -> Optional[np.ndarray]:
    c = np.asarray(counts, dtype=float)
    if c.shape != (4, 2, 2):
        raise ValueError(f"counts must have shape (4, 2, 2), got {c.shape}")
    totals = c.sum(axis=(1, 2))
    if np.any(totals <= 0):
        return None
    # cell [i, j]: i, j = 0 for +1, 1 for -1
    return (c[:, 0, 0] + c[:, 1, 1] - c[:, 0, 1] - c[:, 1, 0]) / totals


def correlation_from_counts(cell) -> Optional[float]:
    """E = (N++ + N-- - N+- - N-+) / N for a single 2x2 setting table."""
    c = np.asarray(cell, dtype=float)
    n = c.sum()
    if n <= 0:
        return None
    return float((c[0, 0] + c[1, 1] - c[0, 1] - c[1, 0]) / n)


def chsh_from_counts(counts) -> Optional[float]:
    e = _setting_correlations(counts)
    if e is None:
        return None
    return float(np.dot(CHSH_SIGNS, e))


def chsh_error_from_counts(counts) -> Optional[float]:
    """Binomial standard error of the CHSH sum, settings treated as independent."""
    e = _setting_correlations(counts)
    if e is None:
        return None
    totals = np.asarray(counts, dtype=float).sum(axis=(1, 2))
    return float(np.sqrt(np.sum((1 - e**2) / totals)))
