"""CSV event files and per-detector stream files."""

from __future__ import annotations

import csv
import io
from typing import Iterable

from .analysis import F1, F2, DetectorRecord, DetectorStream
from .experiment import LEFT, RIGHT, EventRecord

COLUMNS = (
    "event_id",
    "accepted",
    "lr",
    "t_f1_s",
    "t_f2_s",
    "f1_x_m",
    "f1_y_m",
    "f1_z_m",
    "f2_x_m",
    "f2_y_m",
    "f2_z_m",
    "causal_separate",
    "bloch_x",
    "bloch_y",
    "bloch_z",
)


class EventFormatError(ValueError):
    pass


def _real(x: float) -> str:
    # 17 significant digits round-trip any double exactly
    return format(x, ".17g")


def _bool(b: bool) -> str:
    return "true" if b else "false"


def _row(ev: EventRecord) -> list:
    return [
        str(ev.event_id),
        _bool(ev.accepted),
        ev.lr if ev.lr is not None else "None",
        _real(ev.t_f1_s),
        _real(ev.t_f2_s),
        *(_real(v) for v in ev.f1_hit_m),
        *(_real(v) for v in ev.f2_hit_m),
        _bool(ev.causal_separate),
        *(_real(v) for v in ev.teleported_bloch),
    ]


def format_events(events: Iterable[EventRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for ev in events:
        writer.writerow(_row(ev))
    return buf.getvalue()


def write_events(path: str, events: Iterable[EventRecord]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_events(events))


def write_detector_streams(f1_path: str, f2_path: str, events: Iterable[EventRecord]) -> None:
    """Split an event list into the two per-detector files.

    Both files keep the event-file columns; F-1 holds the triggered (kept)
    events and F-2 holds every event.
    """
    events = list(events)
    write_events(f1_path, [ev for ev in events if ev.accepted])
    write_events(f2_path, events)


def _parse_bool(raw: str, column: str, line: int) -> bool:
    if raw == "true":
        return True
    if raw == "false":
        return False
    raise EventFormatError(f"line {line}: column {column!r}: expected true/false, got {raw!r}")


def parse_events(text: str) -> list:
    reader = csv.DictReader(io.StringIO(text))
    header = reader.fieldnames or []
    for col in COLUMNS:
        if col not in header:
            raise EventFormatError(f"missing column {col!r}")
    extra = [c for c in header if c not in COLUMNS]
    if extra:
        raise EventFormatError(f"unexpected column {extra[0]!r}")
    events = []
    for line, row in enumerate(reader, start=2):
        col = "event_id"
        try:
            event_id = int(row[col])
            lr = row["lr"]
            if lr not in (LEFT, RIGHT, "None"):
                col = "lr"
                raise ValueError(lr)
            reals = {}
            for col in COLUMNS:
                if col in ("event_id", "accepted", "lr", "causal_separate"):
                    continue
                reals[col] = float(row[col])
        except (TypeError, ValueError):
            raise EventFormatError(f"line {line}: column {col!r}: bad value {row.get(col)!r}") from None
        events.append(
            EventRecord(
                event_id=event_id,
                accepted=_parse_bool(row["accepted"], "accepted", line),
                lr=None if lr == "None" else lr,
                t_f1_s=reals["t_f1_s"],
                t_f2_s=reals["t_f2_s"],
                f1_hit_m=(reals["f1_x_m"], reals["f1_y_m"], reals["f1_z_m"]),
                f2_hit_m=(reals["f2_x_m"], reals["f2_y_m"], reals["f2_z_m"]),
                causal_separate=_parse_bool(row["causal_separate"], "causal_separate", line),
                teleported_bloch=(reals["bloch_x"], reals["bloch_y"], reals["bloch_z"]),
            )
        )
    return events


def read_events(path: str) -> list:
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_events(fh.read())


def read_detector_streams(f1_path: str, f2_path: str) -> tuple[DetectorStream, DetectorStream]:
    f1 = [
        DetectorRecord(ev.t_f1_s, ev.f1_hit_m, ev.event_id, ev.lr) for ev in read_events(f1_path)
    ]
    f2 = [
        DetectorRecord(ev.t_f2_s, ev.f2_hit_m, ev.event_id, ev.lr) for ev in read_events(f2_path)
    ]
    return DetectorStream.sorted(F1, f1), DetectorStream.sorted(F2, f2)
