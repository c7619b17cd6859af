"""``kipcli`` command line."""
from __future__ import annotations

import argparse
import logging
import os
import sys
from contextlib import contextmanager
from typing import Optional

from . import __version__
from .activity import ActivityTable, AnalysisOptions, NetworkAnalysis, Stat, UnsupportedWindowError, analyze_group
from .addrmodel import Prefix, TimeGrid, parse_instant
from .anonymize import DEFAULT_SENTINEL, anonymize_stream
from .classify import classify_addresses, default_policy, format_classification
from .kaggregate import KipConfig, Mode, ResidualPolicy, aggregate_network
from .logio import LogStats, ingest, read_aggregates, scan_time_range, write_aggregates
from .render import render_group
from .reports import Weighting, format_length_rows, length_distribution, summarize
from .synthoracle import SynthParams, format_manifest, format_truth, generate, oracle_truth

log = logging.getLogger("kipanon")


@contextmanager
def _open_in(path: str):
    if path == "-":
        yield sys.stdin
    else:
        with open(path, encoding="utf-8", newline="") as fh:
            yield fh


@contextmanager
def _open_out(path: Optional[str]):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _grid_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("observation window")
    g.add_argument("--start", help="window start, epoch seconds or ISO-8601 UTC")
    g.add_argument("--interval-seconds", type=int, default=3600)
    g.add_argument("--intervals", type=int, default=168)
    g.add_argument("--auto-grid", action="store_true",
                   help="derive start and interval count from the log's time range")


def _kip_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("aggregation")
    g.add_argument("--k", type=int, default=2)
    g.add_argument("--stat", choices=[s.value for s in Stat], default="min")
    g.add_argument("--mode", choices=[m.value for m in Mode], default="prefix")
    g.add_argument("--residual", choices=[r.value for r in ResidualPolicy], default="suppress")
    g.add_argument("--max-emit-length", type=int, default=64)


def _analysis_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--confidence", type=float, default=0.99)
    p.add_argument("--bridge-stable", action="store_true",
                   help="also infer assignment across quiet intervals for non-random IIDs")


def _load(args, parser) -> tuple[ActivityTable, LogStats]:
    if args.auto_grid:
        with _open_in(args.log) as fh:
            lines = fh.readlines() if args.log == "-" else None
            found = scan_time_range(lines if lines is not None else fh)
        if found is None:
            parser.error("--auto-grid: the log has no parseable timestamps")
        grid = TimeGrid.covering(found[0], found[1], args.interval_seconds)
    else:
        if args.start is None:
            parser.error("--start is required unless --auto-grid is given")
        try:
            start = parse_instant(args.start)
            grid = TimeGrid(start, args.interval_seconds, args.intervals)
        except ValueError as exc:
            parser.error(str(exc))
        lines = None
    if lines is not None:
        table, stats = ingest(lines, grid)
    else:
        with _open_in(args.log) as fh:
            table, stats = ingest(fh, grid)
    print(f"kipcli: {stats.as_text()}", file=sys.stderr)
    return table, stats


def _options(args, parser) -> AnalysisOptions:
    if not 0.0 < args.confidence < 1.0:
        parser.error("--confidence must lie strictly between 0 and 1")
    return AnalysisOptions(default_policy(args.confidence), args.bridge_stable)


def _config(args, parser) -> KipConfig:
    try:
        return KipConfig(args.k, Stat(args.stat), Mode(args.mode), args.max_emit_length,
                         ResidualPolicy(args.residual))
    except ValueError as exc:
        parser.error(str(exc))


def cmd_classify(args, parser) -> int:
    table, _ = _load(args, parser)
    result = classify_addresses(list(table.masks), table.day_counts())
    with _open_out(args.output) as out:
        for a in sorted(result):
            out.write(format_classification(a, result[a]) + "\n")
    return 0


def cmd_matrix(args, parser) -> int:
    table, _ = _load(args, parser)
    if args.view == "inferred" and table.grid.fenceposts < 1:
        parser.error("the inferred view needs --intervals >= 2")
    options = _options(args, parser)
    groups = table.rows_by_subnet()
    wanted = None
    if args.prefix:
        try:
            wanted = Prefix.parse(args.prefix)
        except ValueError as exc:
            parser.error(str(exc))
    sd = {a: n - 1 for a, n in table.day_counts().items()}
    with _open_out(args.output) as out:
        first = True
        for subnet, rows in groups.items():
            if wanted is not None and not wanted.contains(subnet << 64):
                continue
            if not first:
                out.write("\n")
            first = False
            ga = analyze_group(subnet, rows, options)
            out.write(render_group(ga, rows, table.grid, args.view, sd))
    return 0


def cmd_summarize(args, parser) -> int:
    table, stats = _load(args, parser)
    summary = summarize(table, NetworkAnalysis(table, _options(args, parser)))
    with _open_out(args.output) as out:
        out.write(summary.as_tsv() if args.format == "tsv" else summary.as_text())
    return 0


def _aggregate(args, parser):
    cfg = _config(args, parser)
    table, stats = _load(args, parser)
    if table.grid.fenceposts < 1:
        parser.error("aggregation needs --intervals >= 2")
    analysis = NetworkAnalysis(table, _options(args, parser))
    return table, stats, analysis, aggregate_network(analysis, cfg)


def cmd_aggregate(args, parser) -> int:
    _, _, _, aset = _aggregate(args, parser)
    with _open_out(args.output) as out:
        write_aggregates(aset, out)
    log.info("%d aggregates", len(aset))
    return 0


def _read_set(path: str, parser):
    try:
        with open(path, encoding="utf-8") as fh:
            return read_aggregates(fh)
    except (OSError, ValueError) as exc:
        parser.error(f"cannot read aggregate set {path}: {exc}")


def cmd_anon(args, parser) -> int:
    aset = _read_set(args.aggregates, parser)
    with _open_in(args.log) as src, _open_out(args.output) as dst:
        anon = anonymize_stream(aset, src, dst, args.field, args.sentinel, args.with_length)
    log.info("suppressed=%d unparsed=%d", anon.suppressed, anon.unparsed)
    return 0


def cmd_eval(args, parser) -> int:
    aset = _read_set(args.aggregates, parser)
    if not aset.entries:
        parser.error("the aggregate set is empty")
    subnets = None
    if args.weighting == Weighting.COVERED64.value:
        if not args.log:
            parser.error("--weighting covered64 needs --log")
        with _open_in(args.log) as fh:
            table, _ = ingest(fh, aset.grid)
        subnets = {a >> 64 for a in table.masks}
    rows = length_distribution(aset, Weighting(args.weighting), subnets)
    with _open_out(args.output) as out:
        out.write("# length\tcount\tcumulative_fraction\n")
        out.write(format_length_rows(rows))
    return 0


def cmd_pipeline(args, parser) -> int:
    _config(args, parser)  # reject bad settings before reading the log
    if not args.auto_grid and args.intervals < 2:
        parser.error("pipeline needs --intervals >= 2")
    table, stats, analysis, aset = _aggregate(args, parser)
    os.makedirs(args.out_dir, exist_ok=True)
    path = lambda name: os.path.join(args.out_dir, name)  # noqa: E731
    with open(path("aggregates.txt"), "w", encoding="utf-8") as fh:
        write_aggregates(aset, fh)
    with open(path("summary.tsv"), "w", encoding="utf-8") as fh:
        fh.write(summarize(table, analysis).as_tsv())
    with open(path("accounting.tsv"), "w", encoding="utf-8") as fh:
        fh.write(f"lines\t{stats.lines}\nparsed\t{stats.parsed}\n"
                 f"malformed\t{stats.malformed}\nout_of_window\t{stats.out_of_window}\n")
    if aset.entries:
        with open(path("lengths.tsv"), "w", encoding="utf-8") as fh:
            rows = length_distribution(aset, Weighting(args.weighting), analysis.subnets)
            fh.write("# length\tcount\tcumulative_fraction\n" + format_length_rows(rows))
    if args.classify:
        result = classify_addresses(list(table.masks), table.day_counts())
        with open(path("classify.tsv"), "w", encoding="utf-8") as fh:
            fh.writelines(format_classification(a, result[a]) + "\n" for a in sorted(result))
    if not args.no_anon:
        if args.log == "-":
            log.warning("stdin input: skipping the anonymized stream")
        else:
            with _open_in(args.log) as src, open(path("anonymized.log"), "w", encoding="utf-8", newline="") as dst:
                anonymize_stream(aset, src, dst, args.field, args.sentinel, args.with_length)
    log.info("%d aggregates written to %s", len(aset), args.out_dir)
    return 0


def cmd_synth(args, parser) -> int:
    try:
        params = SynthParams(
            hosts=args.hosts, practice=args.practice, hosts_per_subnet=args.hosts_per_subnet,
            subnets_per_48=args.subnets_per_48, start=parse_instant(args.start),
            interval_seconds=args.interval_seconds, intervals=args.intervals, seed=args.seed,
            lifetime_hours=(args.min_lifetime, args.max_lifetime),
            activity_per_hour=(args.min_rate, args.max_rate),
        )
    except ValueError as exc:
        parser.error(str(exc))
    scenario = generate(params)
    os.makedirs(args.out_dir, exist_ok=True)
    with open(os.path.join(args.out_dir, "log.tsv"), "w", encoding="utf-8") as fh:
        fh.writelines(scenario.log_lines())
    with open(os.path.join(args.out_dir, "truth.tsv"), "w", encoding="utf-8") as fh:
        fh.write(format_truth(oracle_truth(scenario)))
    with open(os.path.join(args.out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        fh.write(format_manifest(scenario))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kipcli", description="kIP anonymization toolkit for IPv6 activity logs")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, func, help_text, log_input=True):
        p = sub.add_parser(name, help=help_text)
        if log_input:
            p.add_argument("log", help="activity log, '-' for stdin")
            _grid_args(p)
        p.add_argument("-o", "--output", help="output file (default stdout)")
        p.set_defaults(func=func, parser=p)
        return p

    command("classify", cmd_classify, "per-address IID class, DPL and stable days")

    p = command("matrix", cmd_matrix, "render per-/64 activity matrices")
    p.add_argument("--view", choices=["raw", "inferred"], default="raw")
    p.add_argument("--prefix", help="only /64s inside this prefix")
    _analysis_args(p)

    p = command("summarize", cmd_summarize, "activity counts and simultaneous-assignment bounds")
    p.add_argument("--format", choices=["text", "tsv"], default="text")
    _analysis_args(p)

    p = command("aggregate", cmd_aggregate, "synthesize anonymous aggregates")
    _kip_args(p)
    _analysis_args(p)

    p = command("anon", cmd_anon, "anonymize the address column of a log", log_input=False)
    p.add_argument("log", help="log to anonymize, '-' for stdin")
    p.add_argument("--aggregates", required=True)
    _anon_args(p)

    p = command("eval", cmd_eval, "prefix-length histogram and CDF of an aggregate set", log_input=False)
    p.add_argument("--aggregates", required=True)
    p.add_argument("--weighting", choices=[w.value for w in Weighting], default="aggregate")
    p.add_argument("--log", help="activity log giving the /64s for covered64 weighting")

    p = command("pipeline", cmd_pipeline, "classify, analyze, aggregate and anonymize in one run")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--weighting", choices=[w.value for w in Weighting], default="aggregate")
    p.add_argument("--classify", action="store_true", help="also write classify.tsv")
    p.add_argument("--no-anon", action="store_true", help="skip the anonymized log")
    _kip_args(p)
    _analysis_args(p)
    _anon_args(p)

    p = command("synth", cmd_synth, "generate a synthetic log with ground truth", log_input=False)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--hosts", type=int, default=100)
    p.add_argument("--practice", choices=["jp", "dispersed"], default="dispersed")
    p.add_argument("--hosts-per-subnet", type=float, default=2.0)
    p.add_argument("--subnets-per-48", type=int, default=16)
    p.add_argument("--min-lifetime", type=float, default=2.0, help="hours")
    p.add_argument("--max-lifetime", type=float, default=24.0, help="hours")
    p.add_argument("--min-rate", type=float, default=0.05, help="events per hour")
    p.add_argument("--max-rate", type=float, default=1.0, help="events per hour")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--start", default="1490400000")
    p.add_argument("--interval-seconds", type=int, default=3600)
    p.add_argument("--intervals", type=int, default=168)
    return parser


def _anon_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--field", type=int, default=1, help="0-based tab-separated address column")
    p.add_argument("--sentinel", default=DEFAULT_SENTINEL, help="text written for suppressed addresses")
    p.add_argument("--with-length", action="store_true", help="append /len to anonymized addresses")


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        return args.func(args, args.parser)
    except UnsupportedWindowError as exc:
        args.parser.error(str(exc))
    except OSError as exc:
        print(f"kipcli: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
