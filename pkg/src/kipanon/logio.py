"""Activity-log ingestion and the aggregate-set file format."""
from __future__ import annotations

import socket
from dataclasses import dataclass
from typing import IO, Iterable, Iterator, Optional

import numpy as np

from .activity import ActivityTable, Stat
from .addrmodel import Prefix, TimeGrid, format_address, parse_instant
from .kaggregate import (
    AggregateEntry,
    AggregateSet,
    KipConfig,
    Mode,
    ResidualPolicy,
)


class FormatError(ValueError):
    pass


@dataclass(frozen=True)
class LogEvent:
    timestamp: int
    address: int


@dataclass
class LogStats:
    lines: int = 0
    parsed: int = 0
    malformed: int = 0
    out_of_window: int = 0

    def balanced(self) -> bool:
        return self.lines == self.parsed + self.malformed + self.out_of_window

    def as_text(self) -> str:
        return (
            f"lines={self.lines} parsed={self.parsed} "
            f"malformed={self.malformed} out_of_window={self.out_of_window}"
        )


def _split(line: str) -> Optional[tuple[int, int]]:
    parts = line.rstrip("\r\n").split("\t", 2)
    if len(parts) < 2:
        return None
    try:
        t = parse_instant(parts[0])
        a = int.from_bytes(socket.inet_pton(socket.AF_INET6, parts[1].strip()), "big")
    except (OSError, ValueError):
        return None
    return t, a


def parse_log(lines: Iterable[str], grid: TimeGrid, stats: Optional[LogStats] = None) -> Iterator[LogEvent]:
    """Yield in-window events from ``<timestamp>\\t<address>[\\t...]`` lines.

    Bad lines and out-of-window lines are tallied in *stats*.
    """
    stats = stats if stats is not None else LogStats()
    for line in lines:
        stats.lines += 1
        got = _split(line)
        if got is None:
            stats.malformed += 1
            continue
        t, a = got
        if not grid.contains(t):
            stats.out_of_window += 1
            continue
        stats.parsed += 1
        yield LogEvent(t, a)


def ingest(lines: Iterable[str], grid: TimeGrid, table: Optional[ActivityTable] = None) -> tuple[ActivityTable, LogStats]:
    """Fold log lines straight into an activity table.

    Same line semantics as :func:`parse_log`, without materialising events.
    """
    table = table if table is not None else ActivityTable(grid)
    stats = LogStats()
    masks, days = table.masks, table.days
    start, step, end = grid.start, grid.interval_seconds, grid.end
    day0 = start // 86400
    cache: dict[str, int] = {}
    pton, AF6, from_bytes = socket.inet_pton, socket.AF_INET6, int.from_bytes
    n = parsed = malformed = late = 0
    for line in lines:
        n += 1
        parts = line.split("\t", 2)
        if len(parts) < 2:
            malformed += 1
            continue
        head = parts[0]
        if head.isdigit():
            t = int(head)
        else:
            try:
                t = parse_instant(head)
            except ValueError:
                malformed += 1
                continue
        text = parts[1]
        a = cache.get(text)
        if a is None:
            try:
                a = from_bytes(pton(AF6, text.strip()), "big")
            except (OSError, ValueError):
                malformed += 1
                continue
            cache[text] = a
        if not start <= t < end:
            late += 1
            continue
        parsed += 1
        masks[a] = masks.get(a, 0) | (1 << ((t - start) // step))
        days[a] = days.get(a, 0) | (1 << (t // 86400 - day0))
    stats.lines, stats.parsed, stats.malformed, stats.out_of_window = n, parsed, malformed, late
    return table, stats


def scan_time_range(lines: Iterable[str]) -> Optional[tuple[int, int]]:
    """Min and max parseable timestamps, for deriving a grid from data."""
    lo = hi = None
    for line in lines:
        got = _split(line)
        if got is None:
            continue
        t = got[0]
        lo = t if lo is None or t < lo else lo
        hi = t if hi is None or t > hi else hi
    return None if lo is None else (lo, hi)


# -- aggregate-set files -------------------------------------------------

_HEADER_KEYS = (
    "version", "k", "stat", "mode", "max-emit-length",
    "grid-start", "interval-seconds", "intervals", "residual",
)


def format_aggregates(aset: AggregateSet) -> str:
    cfg, grid = aset.config, aset.grid
    head = [
        "# kipanon aggregate set",
        f"# version: {aset.version}",
        f"# k: {cfg.k}",
        f"# stat: {cfg.stat.value}",
        f"# mode: {cfg.mode.value}",
        f"# max-emit-length: {cfg.max_emit_length}",
        f"# grid-start: {grid.start}",
        f"# interval-seconds: {grid.interval_seconds}",
        f"# intervals: {grid.intervals}",
        f"# residual: {cfg.residual.value}",
    ]
    if aset.catchall is not None:
        head.append(f"# catchall: {aset.catchall}")
    body = [
        f"{e.prefix}\t{e.stat_min}\t{e.stat_median}\t{e.stat_max}" for e in aset.entries
    ]
    return "\n".join(head + body) + "\n"


def write_aggregates(aset: AggregateSet, fh: IO[str]) -> None:
    fh.write(format_aggregates(aset))


def read_aggregates(fh: Iterable[str]) -> AggregateSet:
    header: dict[str, str] = {}
    entries = []
    for lineno, raw in enumerate(fh, 1):
        line = raw.rstrip("\r\n")
        if not line:
            continue
        if line.startswith("#"):
            key, sep, value = line[1:].strip().partition(":")
            if sep:
                header[key.strip()] = value.strip()
            continue
        fields = line.split("\t")
        if len(fields) != 4:
            raise FormatError(f"line {lineno}: expected 4 tab-separated fields")
        try:
            prefix = Prefix.parse(fields[0])
            lo, med, hi = (int(x) for x in fields[1:])
        except ValueError as exc:
            raise FormatError(f"line {lineno}: {exc}") from None
        entries.append(AggregateEntry(prefix, lo, med, hi))
    missing = [k for k in _HEADER_KEYS if k not in header]
    if missing:
        raise FormatError(f"aggregate file header lacks {', '.join(missing)}")
    cfg = KipConfig(
        k=int(header["k"]),
        stat=Stat(header["stat"]),
        mode=Mode(header["mode"]),
        max_emit_length=int(header["max-emit-length"]),
        residual=ResidualPolicy(header["residual"]),
    )
    grid = TimeGrid(int(header["grid-start"]), int(header["interval-seconds"]), int(header["intervals"]))
    catchall = Prefix.parse(header["catchall"]) if "catchall" in header else None
    return AggregateSet(entries, cfg, grid, catchall=catchall, version=header["version"])


def format_series_section(name: str, series: np.ndarray) -> list[str]:
    return [f"# {name}"] + [f"{j}\t{int(v)}" for j, v in enumerate(series)]


def format_address_list(addrs: Iterable[int]) -> str:
    return "".join(format_address(a) + "\n" for a in addrs)
