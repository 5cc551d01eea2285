"""Command line entry point: collect, generate, analyze and report."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import io
from .analysis import AnalysisConfig, AnalysisError, analyze_snapshots
from .collector import (
    CollectorConfig,
    CollectorError,
    HttpSource,
    ScriptedSource,
    VirtualClock,
    WallClock,
    run_schedule,
)
from .infotheory import DEFAULT_BINS, DEFAULT_EPSILON, InfoTheoryError
from .synthgen import GeneratorConfig, GeneratorError, generate
from .timeseries import NUM_PERIODS, PERIOD_SECONDS, Metric, TimeSeriesError

logger = logging.getLogger("attention_entropy")

EXPECTED_ERRORS = (
    AnalysisError,
    CollectorError,
    GeneratorError,
    InfoTheoryError,
    TimeSeriesError,
    io.SnapshotFormatError,
    OSError,
    ValueError,
)


def _grid_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--period-seconds", type=int, default=PERIOD_SECONDS, help="slot width (default: 6h)")
    p.add_argument("--num-periods", type=int, default=NUM_PERIODS, help="slots per video (default: 56 = 14 days)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="attention-entropy",
        description="Entropy and divergence analysis of video attention time series.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("collect", help="poll a stats source on a fixed schedule")
    p.add_argument("--source", choices=("mock", "http"), default="mock")
    p.add_argument("--script", help="JSON script for the mock source")
    p.add_argument("--endpoint", help="base URL for the http source")
    p.add_argument("--out-dir", required=True, help="store directory for the snapshot log")
    p.add_argument("--interval", type=int, default=PERIOD_SECONDS, help="seconds between cycles")
    p.add_argument("--horizon-days", type=float, default=14.0, help="how long to keep polling")
    p.add_argument("--track-periods", type=int, default=NUM_PERIODS, help="cycles to track each video")
    p.add_argument("--start-time", type=int, help="epoch seconds of cycle 0")
    p.add_argument("--max-cycles", type=int, help="stop after this many new cycles")
    p.add_argument("--wall-clock", action="store_true", help="sleep between cycles (default for http)")

    p = sub.add_parser("generate", help="write a synthetic snapshot CSV")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--num-trending", type=int, default=1000)
    p.add_argument("--num-recent", type=int, default=1500)
    p.add_argument("--early-volatility", type=float, default=0.6)
    p.add_argument("--coupling", type=float, default=0.95)
    p.add_argument("--fraction", type=float, default=0.2, help="share of recent videos with coupled metrics")
    p.add_argument("--output", default="snapshots.csv")
    _grid_args(p)

    p = sub.add_parser("analyze", help="run every analysis and write the report bundle")
    p.add_argument("--input", required=True, help="snapshot CSV")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--bins", type=int, default=DEFAULT_BINS)
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    p.add_argument("--metric", choices=[m.value for m in Metric], default=Metric.VIEWS.value)
    p.add_argument("--fraction", type=float, default=0.2, help="share of recent videos in R5")
    p.add_argument("--hist-bin-width", type=float, default=0.1)
    p.add_argument("--entropy-mode", choices=("per_period", "cumulative"), default="per_period")
    p.add_argument("--divergence-mode", choices=("per_period", "cumulative"), default="cumulative")
    _grid_args(p)

    p = sub.add_parser("report", help="re-render tables from an existing report.json")
    p.add_argument("--input", required=True, help="report.json")
    p.add_argument("--out-dir", required=True)
    return parser


def cmd_collect(args) -> int:
    if args.source == "mock":
        if not args.script:
            raise ValueError("--script is required for the mock source")
        source = ScriptedSource.from_file(args.script)
    else:
        if not args.endpoint:
            raise ValueError("--endpoint is required for the http source")
        source = HttpSource(args.endpoint)
    config = CollectorConfig(
        store_dir=args.out_dir,
        interval=args.interval,
        horizon_days=args.horizon_days,
        track_periods=args.track_periods,
        start_time=args.start_time,
    )
    wall = args.wall_clock or args.source == "http"
    clock = WallClock() if wall else VirtualClock(args.start_time or 1348185600)
    markers = run_schedule(source, config, clock=clock, max_cycles=args.max_cycles)
    Path(args.out_dir, "collect_config.json").write_text(
        json.dumps({**vars(args), "wall_clock": wall}, indent=1, sort_keys=True) + "\n"
    )
    done = sum(m.completed for m in markers)
    print(f"{len(markers)} cycles run ({done} complete), log in {args.out_dir}")
    return 0


def cmd_generate(args) -> int:
    config = GeneratorConfig(
        seed=args.seed,
        num_trending=args.num_trending,
        num_recent=args.num_recent,
        num_periods=args.num_periods,
        period_seconds=args.period_seconds,
        early_volatility=args.early_volatility,
        coupling=args.coupling,
        recent_coupled_fraction=args.fraction,
    )
    corpus = generate(config)
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    n = io.write_snapshots(out, corpus.snapshots())
    out.with_suffix(".config.json").write_text(json.dumps(config.to_dict(), indent=1, sort_keys=True) + "\n")
    print(f"wrote {n} snapshots for {len(corpus.videos)} videos to {out}")
    return 0


def cmd_analyze(args) -> int:
    config = AnalysisConfig(
        num_bins=args.bins,
        epsilon=args.epsilon,
        period_seconds=args.period_seconds,
        num_periods=args.num_periods,
        metric=args.metric,
        fraction=args.fraction,
        hist_bin_width=args.hist_bin_width,
        entropy_mode=args.entropy_mode,
        divergence_mode=args.divergence_mode,
    )
    config.binning  # validates bins and epsilon before reading input
    snapshots = io.read_snapshots(args.input)
    report = analyze_snapshots(snapshots, config).to_dict()
    report["config"]["input"] = Path(args.input).name
    io.dump_report(report, args.out_dir)
    io.write_tables(report, args.out_dir)
    print(f"report written to {args.out_dir}")
    return 0


def cmd_report(args) -> int:
    report = io.load_report(args.input)
    paths = io.write_tables(report, args.out_dir)
    if Path(args.input).resolve().parent != Path(args.out_dir).resolve():
        io.dump_report(report, args.out_dir)
    print(f"{len(paths)} tables written to {args.out_dir}")
    return 0


COMMANDS = {"collect": cmd_collect, "generate": cmd_generate, "analyze": cmd_analyze, "report": cmd_report}


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except EXPECTED_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
