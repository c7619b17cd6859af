"""Activity matrices, assignment episodes and the per-interval /
per-fencepost lower bounds on simultaneously assigned addresses.

Rows are kept as integer bitmaps (bit ``t`` set = activity in interval
``t``).  Everything that touches many /64s at once works on flat episode
arrays ``(group, first, last)`` so a whole network is one numpy pass.
"""
from __future__ import annotations

import enum
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Optional, Sequence

import numpy as np

from .addrmodel import TimeGrid, interval_of, subnet64
from .classify import (
    IidClass,
    RandomnessPolicy,
    default_policy,
    classify_iid_stateless,
    dpl_by_address,
    plausible_random_set,
)


class UnsupportedWindowError(ValueError):
    """The window has no fenceposts (w = 1)."""


class Stat(str, enum.Enum):
    MIN = "min"
    MAX = "max"
    MEDIAN = "median"

    def __str__(self) -> str:
        return self.value


def bits_of(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


@dataclass(frozen=True)
class ActivityRow:
    address: int
    active: int  # bitmap over intervals

    def __post_init__(self) -> None:
        if self.active <= 0:
            raise ValueError("an activity row needs at least one active interval")

    @classmethod
    def from_intervals(cls, address: int, intervals: Iterable[int]) -> "ActivityRow":
        mask = 0
        for t in intervals:
            mask |= 1 << t
        return cls(int(address), mask)

    @property
    def intervals(self) -> list[int]:
        return bits_of(self.active)


@dataclass(frozen=True)
class EpisodeRow:
    address: int
    first: int
    last: int

    def __post_init__(self) -> None:
        if not 0 <= self.first <= self.last:
            raise ValueError(f"bad episode [{self.first}, {self.last}]")

    @property
    def is_short(self) -> bool:
        return self.first == self.last

    @property
    def kind(self) -> str:
        return "short" if self.first == self.last else "span"


def build_rows(events: Iterable[tuple], grid: TimeGrid) -> dict[int, list[ActivityRow]]:
    """Group ``(address, instant)`` events into one row per address, keyed by
    the address's /64 (as a 64-bit integer)."""
    masks: dict[int, int] = {}
    for addr, t in events:
        a = int(addr)
        masks[a] = masks.get(a, 0) | (1 << interval_of(grid, t))
    groups: dict[int, list[ActivityRow]] = defaultdict(list)
    for a in sorted(masks):
        groups[subnet64(a)].append(ActivityRow(a, masks[a]))
    return dict(groups)


def mark_episodes(row: ActivityRow) -> EpisodeRow:
    """Bridge a row into one episode from its first to its last activity.

    Only sound when the row's IID is pseudorandom; callers decide that.
    """
    mask = row.active
    return EpisodeRow(row.address, (mask & -mask).bit_length() - 1, mask.bit_length() - 1)


def unbridged_episodes(row: ActivityRow) -> list[EpisodeRow]:
    """One short episode per active interval; no assignment is inferred
    across quiet intervals."""
    return [EpisodeRow(row.address, t, t) for t in row.intervals]


def _episode_arrays(rows: Sequence[EpisodeRow]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    first = np.fromiter((r.first for r in rows), dtype=np.int64, count=len(rows))
    last = np.fromiter((r.last for r in rows), dtype=np.int64, count=len(rows))
    return np.zeros(len(rows), dtype=np.int64), first, last


def interval_bounds_matrix(
    group: np.ndarray, first: np.ndarray, last: np.ndarray, n_groups: int, w: int
) -> np.ndarray:
    """Column totals for every group at once, shape ``(n_groups, w)``.

    Per column: each '@' counts 1; the larger of the '>' and '<' counts is
    added; the 'X' marks together add 1 only when the column has neither
    '>' nor '<'.
    """
    if len(first) and int(last.max()) >= w:
        raise ValueError("episode extends past the window")
    span = first < last
    flat = n_groups * w
    g_w = group * w
    starts = np.bincount((g_w + first)[span], minlength=flat).reshape(n_groups, w)
    ends = np.bincount((g_w + last)[span], minlength=flat).reshape(n_groups, w)
    shorts = np.bincount((g_w + first)[~span], minlength=flat).reshape(n_groups, w)
    # '@' covers first+1 .. last-1: difference array on a padded grid
    diff = np.zeros((n_groups, w + 1), dtype=np.int64)
    gs = group[span]
    np.add.at(diff, (gs, first[span] + 1), 1)
    np.add.at(diff, (gs, last[span]), -1)
    inner = np.cumsum(diff, axis=1)[:, :w]
    total = inner + np.maximum(starts, ends)
    total += (shorts > 0) & (starts == 0) & (ends == 0)
    return total


def spanning_counts_matrix(
    group: np.ndarray, first: np.ndarray, last: np.ndarray, n_groups: int, f: int,
    dtype=np.int32,
) -> np.ndarray:
    """Per fencepost ``p``, how many episodes have ``first <= p < last``.

    Shape ``(n_groups, f)``; fencepost p is the boundary after interval p.
    """
    span = first < last
    diff = np.zeros((n_groups, f + 1), dtype=dtype)
    gs = group[span]
    np.add.at(diff, (gs, first[span]), 1)
    # last <= w - 1 = f, so the closing index always fits the padded row
    np.add.at(diff, (gs, last[span]), -1)
    return np.cumsum(diff, axis=1, dtype=dtype)[:, :f]


def interval_lower_bounds(rows: Sequence[EpisodeRow], grid: TimeGrid) -> np.ndarray:
    group, first, last = _episode_arrays(rows)
    return interval_bounds_matrix(group, first, last, 1, grid.intervals)[0]


def address_count_series(rows: Sequence[EpisodeRow], grid: TimeGrid) -> np.ndarray:
    """Number of episodes spanning each fencepost."""
    group, first, last = _episode_arrays(rows)
    return spanning_counts_matrix(group, first, last, 1, grid.fenceposts, np.int64)[0]


def fencepost_series(rows: Sequence[EpisodeRow], grid: TimeGrid) -> np.ndarray:
    """1 at every fencepost where the /64 must have been assigned."""
    return (address_count_series(rows, grid) > 0).astype(np.int64)


def accumulate(series_list: Sequence[np.ndarray], length: Optional[int] = None) -> np.ndarray:
    """Elementwise sum; an empty list sums to zeros of *length*."""
    if not series_list:
        if length is None:
            raise ValueError("length is required to sum an empty list")
        return np.zeros(length, dtype=np.int64)
    n = len(series_list[0])
    if length is not None and n != length:
        raise ValueError(f"series length {n} != {length}")
    total = np.zeros(n, dtype=np.int64)
    for s in series_list:
        if len(s) != n:
            raise ValueError(f"series length mismatch: {len(s)} != {n}")
        total += s
    return total


def series_stat(series, stat) -> int:
    """min, max or median (lower middle for even lengths)."""
    values = np.asarray(series)
    if values.size == 0:
        raise ValueError("statistic of an empty series")
    stat = Stat(stat)
    if stat is Stat.MIN:
        return int(values.min())
    if stat is Stat.MAX:
        return int(values.max())
    k = (values.size - 1) // 2
    return int(np.partition(values, k)[k])


def series_stats(series) -> tuple[int, int, int]:
    """``(min, median, max)`` in one pass."""
    values = np.asarray(series)
    if values.size == 0:
        raise ValueError("statistic of an empty series")
    k = (values.size - 1) // 2
    return int(values.min()), int(np.partition(values, k)[k]), int(values.max())


@dataclass
class AnalysisOptions:
    policy: RandomnessPolicy = field(default_factory=default_policy)
    # bridge stable (non-randomized) IIDs too
    bridge_stable: bool = False


@dataclass
class GroupAnalysis:
    """Everything derived for one /64."""

    subnet: int
    addresses: list[int]
    classes: dict[int, IidClass]
    dpls: dict[int, Optional[int]]
    plausibly_random: Optional[bool]  # None for a single randomized address
    episodes: list[EpisodeRow]
    bridged: set[int]


def analyze_group(
    subnet: int, rows: Sequence[ActivityRow], options: Optional[AnalysisOptions] = None
) -> GroupAnalysis:
    """Classify one /64's addresses and turn its rows into episodes.

    Randomized-IID rows are bridged when the group's randomized addresses
    pass the distinctness test (a lone randomized address always does);
    other rows count one short episode per active interval.
    """
    options = options or AnalysisOptions()
    addrs = [r.address for r in rows]
    classes = {a: classify_iid_stateless(a) for a in addrs}
    dpls = dpl_by_address(addrs)
    randomized = [a for a in addrs if classes[a] is IidClass.RANDOMIZED]
    plausible: Optional[bool]
    if len(randomized) >= 2:
        rdpl = dpls if len(randomized) == len(addrs) else None
        plausible = plausible_random_set(randomized, options.policy, rdpl)
    elif randomized:
        plausible = None
    else:
        plausible = False
    bridged: set[int] = set()
    if plausible is not False:
        bridged.update(randomized)
    if options.bridge_stable:
        bridged.update(a for a in addrs if classes[a] is not IidClass.RANDOMIZED)
    episodes: list[EpisodeRow] = []
    for r in rows:
        if r.address in bridged:
            episodes.append(mark_episodes(r))
        else:
            episodes.extend(unbridged_episodes(r))
    return GroupAnalysis(subnet, addrs, classes, dpls, plausible, episodes, bridged)


class ActivityTable:
    """Address → interval bitmap (and UTC-day bitmap) for one window."""

    def __init__(self, grid: TimeGrid):
        self.grid = grid
        self.masks: dict[int, int] = {}
        self.days: dict[int, int] = {}
        self._day0 = grid.start // 86400

    def add(self, address: int, t: int) -> None:
        iv = interval_of(self.grid, t)
        a = int(address)
        self.masks[a] = self.masks.get(a, 0) | (1 << iv)
        bit = 1 << (t // 86400 - self._day0)
        self.days[a] = self.days.get(a, 0) | bit

    def __len__(self) -> int:
        return len(self.masks)

    def rows_by_subnet(self) -> dict[int, list[ActivityRow]]:
        groups: dict[int, list[ActivityRow]] = defaultdict(list)
        for a in sorted(self.masks):
            groups[a >> 64].append(ActivityRow(a, self.masks[a]))
        return dict(groups)

    def day_counts(self) -> dict[int, int]:
        return {a: m.bit_count() for a, m in self.days.items()}


class NetworkAnalysis:
    """Episode arrays and per-/64 series for a whole table."""

    def __init__(self, table: ActivityTable, options: Optional[AnalysisOptions] = None):
        self.grid = table.grid
        self.options = options or AnalysisOptions()
        groups = table.rows_by_subnet()
        self.subnets: list[int] = sorted(groups)
        self.address_total = len(table)
        g_idx, firsts, lasts = [], [], []
        random_flags = []
        for g, subnet in enumerate(self.subnets):
            ga = analyze_group(subnet, groups[subnet], self.options)
            random_flags.append(ga.plausibly_random)
            for e in ga.episodes:
                g_idx.append(g)
                firsts.append(e.first)
                lasts.append(e.last)
        self.plausibly_random = random_flags
        self.group = np.asarray(g_idx, dtype=np.int64)
        self.first = np.asarray(firsts, dtype=np.int64)
        self.last = np.asarray(lasts, dtype=np.int64)

    @property
    def n_groups(self) -> int:
        return len(self.subnets)

    @cached_property
    def address_series(self) -> np.ndarray:
        """``(n_groups, f)`` counts of addresses assigned at each fencepost."""
        return spanning_counts_matrix(
            self.group, self.first, self.last, self.n_groups, self.grid.fenceposts
        )

    @cached_property
    def prefix_series(self) -> np.ndarray:
        """``(n_groups, f)`` 0/1: the /64 was assigned at the fencepost."""
        return (self.address_series > 0).astype(np.int32)

    @cached_property
    def interval_bounds(self) -> np.ndarray:
        """``(n_groups, w)`` per-/64 column totals."""
        return interval_bounds_matrix(
            self.group, self.first, self.last, self.n_groups, self.grid.intervals
        )
