"""Command-line front end: simulate, analyze, bell, teleport-check."""

from __future__ import annotations

import argparse
import logging
import sys
import time
from typing import Optional

from . import eventio
from .analysis import RunSummary, analyze_events, analyze_streams
from .config import ConfigError, RunConfig, format_config, load_config
from .experiment import ConfigurationError, run_simulation
from .protocols import TSIRELSON, run_bell_test, teleport_check

log = logging.getLogger("spin_teleport")

SUMMARY_HEADER = "== run summary =="


def _num(x: Optional[float]) -> str:
    return "undefined" if x is None else repr(x)


def _pm(value: Optional[float], err: Optional[float]) -> str:
    if value is None:
        return "undefined"
    return f"{value!r} +/- {err!r}"


def format_summary(summary: RunSummary, causal_only: bool) -> str:
    lines = [
        SUMMARY_HEADER,
        f"selection              = {'causal only' if causal_only else 'all coincidences'}",
        f"n_total                = {summary.n_total}",
        f"n_accepted             = {summary.n_accepted}",
        f"n_left                 = {summary.n_left}",
        f"n_right                = {summary.n_right}",
        f"n_causal               = {summary.n_causal}",
        f"acceptance_rate        = {_num(summary.acceptance_rate)}",
        f"asymmetry              = {_pm(summary.asymmetry, summary.asymmetry_error)}",
        f"estimated_polarization = {_pm(summary.estimated_polarization, summary.estimated_polarization_error)}",
        f"chsh_value             = {_num(summary.chsh_value)}",
    ]
    return "\n".join(lines) + "\n"


def _geometry_lines(config: RunConfig) -> str:
    g = config.setup().geometry
    return (
        "== geometry ==\n"
        f"separation S (used)    = {g.separation!r} m\n"
        f"|PH2 - K|              = {g.ph2_k_distance!r} m\n"
        f"|F1 - F2|              = {g.f1_f2_distance!r} m\n"
    )


def _emit(text: str, path: str) -> None:
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _apply_overrides(config: RunConfig, args) -> RunConfig:
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["master_seed"] = args.seed
    if getattr(args, "events", None) is not None:
        changes["n_events"] = args.events
    if getattr(args, "causal_only", False):
        changes["causal_only"] = True
    if getattr(args, "out", None) is not None:
        changes["events_path"] = args.out
    return config.replace(**changes) if changes else config


def cmd_simulate(config: RunConfig, streams_prefix: Optional[str] = None) -> str:
    start = time.perf_counter()
    setup = config.setup()
    if setup.source.beam.outside_design_window:
        log.warning("beam energy %s MeV is outside the 20-50 MeV design window", config.beam_energy_mev)
    events, summary = run_simulation(
        config.n_events,
        config.master_seed,
        setup,
        window_s=config.coincidence_window_s,
        causal_only=config.causal_only,
        workers=config.workers,
    )
    eventio.write_events(config.events_path, events)
    if streams_prefix:
        eventio.write_detector_streams(f"{streams_prefix}_f1.csv", f"{streams_prefix}_f2.csv", events)
    log.info("simulation took %.2f s", time.perf_counter() - start)
    report = (
        "== configuration ==\n"
        + format_config(config, comments=True)
        + _geometry_lines(config)
        + format_summary(summary, config.causal_only)
    )
    _emit(report, config.report_path)
    return report


def cmd_analyze(
    config: RunConfig,
    event_file: Optional[str] = None,
    f1_file: Optional[str] = None,
    f2_file: Optional[str] = None,
) -> str:
    window = config.coincidence_window_s
    separation = config.setup().geometry.separation
    a_y = config.analyzing_power
    if event_file is not None:
        events = eventio.read_events(event_file)
        summary = analyze_events(events, window, separation, a_y, config.causal_only)
    else:
        f1, f2 = eventio.read_detector_streams(f1_file, f2_file)
        summary = analyze_streams(f1, f2, window, separation, a_y, config.causal_only)
    report = format_summary(summary, config.causal_only)
    _emit(report, config.report_path)
    return report


def cmd_bell(config: RunConfig) -> str:
    result = run_bell_test(config.singlet_fraction, config.n_events, config.master_seed)
    lines = ["== CHSH test ==", f"singlet_fraction = {config.singlet_fraction!r}", f"events = {config.n_events}"]
    for s, name in enumerate(("(a,b)", "(a,b')", "(a',b)", "(a',b')")):
        c = result.counts[s]
        lines.append(f"{name:8s} ++={c[0, 0]} +-={c[0, 1]} -+={c[1, 0]} --={c[1, 1]}")
    lines += [
        f"S measured = {result.chsh!r} +/- {result.chsh_error!r}",
        f"S exact    = {result.exact!r}",
        f"Tsirelson  = {TSIRELSON!r}",
        f"classical bound 2 exceeded by {(abs(result.chsh) - 2) / result.chsh_error:.1f} sigma",
    ]
    report = "\n".join(lines) + "\n"
    _emit(report, config.report_path)
    return report


def cmd_teleport_check(config: RunConfig) -> str:
    check = teleport_check(config.singlet_fraction, config.n_events, config.master_seed)
    report = (
        "== teleport check ==\n"
        f"singlet_fraction       = {config.singlet_fraction!r}\n"
        f"input states           = {len(check.inputs)}\n"
        f"min fidelity           = {float(check.fidelities.min())!r}\n"
        f"mean fidelity          = {float(check.fidelities.mean())!r}\n"
        f"predicted fidelity     = {check.predicted_fidelity!r}\n"
        f"max |fid - predicted|  = {check.max_deviation!r}\n"
        f"acceptance (sampled)   = {check.acceptance_rate!r} +/- {check.acceptance_error!r}\n"
        f"acceptance (exact)     = {float(check.acceptance_probabilities.mean())!r}\n"
    )
    _emit(report, config.report_path)
    return report


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spin-teleport", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", metavar="PATH", help="key = value configuration file")
        p.add_argument("--seed", type=int, help="override master_seed")
        p.add_argument("--events", type=int, help="override n_events")

    p = sub.add_parser("simulate", help="generate events, write the event file and a report")
    common(p)
    p.add_argument("--out", metavar="PATH", help="event file path (overrides events_path)")
    p.add_argument("--causal-only", action="store_true")
    p.add_argument("--streams", metavar="PREFIX", help="also write PREFIX_f1.csv and PREFIX_f2.csv")

    p = sub.add_parser("analyze", help="rebuild the summary from an event file or detector streams")
    p.add_argument("event_file", nargs="?")
    p.add_argument("--config", metavar="PATH")
    p.add_argument("--f1", metavar="PATH", help="F-1 stream file")
    p.add_argument("--f2", metavar="PATH", help="F-2 stream file")
    p.add_argument("--causal-only", action="store_true")

    p = sub.add_parser("bell", help="four-setting CHSH run at optimal axes")
    common(p)

    p = sub.add_parser("teleport-check", help="post-selected fidelity sweep over random inputs")
    common(p)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = _apply_overrides(load_config(args.config), args)
        if args.command == "simulate":
            cmd_simulate(config, args.streams)
        elif args.command == "analyze":
            if (args.event_file is None) == (args.f1 is None or args.f2 is None):
                parser.error("give either an event file or both --f1 and --f2")
            cmd_analyze(config, args.event_file, args.f1, args.f2)
        elif args.command == "bell":
            cmd_bell(config)
        else:
            cmd_teleport_check(config)
    except (ConfigError, ConfigurationError, eventio.EventFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
