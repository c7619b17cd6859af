"""Anonymous aggregate synthesis over a path-compressed binary trie of /64s.

Each leaf carries the fencepost series of one active /64.  A post-order
walk folds every node whose statistic is still below ``k`` into its
nearest branch ancestor; a node that reaches ``k`` is emitted and its
counts stop there.
"""
from __future__ import annotations

import enum
from bisect import bisect_left
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .activity import (
    NetworkAnalysis,
    Stat,
    UnsupportedWindowError,
    address_count_series,
    series_stat,
    series_stats,
)
from .addrmodel import Prefix, TimeGrid

__all__ = [
    "AggregateEntry",
    "AggregateSet",
    "KipConfig",
    "Mode",
    "ResidualPolicy",
    "TrieNode",
    "address_count_series",
    "build_trie",
    "per64_series",
    "synthesize_aggregates",
]

TOOL_VERSION = "kipanon 0.1.0"


class Mode(str, enum.Enum):
    PREFIX = "prefix"
    ADDRESS = "address"

    def __str__(self) -> str:
        return self.value


class ResidualPolicy(str, enum.Enum):
    SUPPRESS = "suppress"
    ROOT = "root"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class KipConfig:
    k: int = 2
    stat: Stat = Stat.MIN
    mode: Mode = Mode.PREFIX
    max_emit_length: int = 64
    residual: ResidualPolicy = ResidualPolicy.SUPPRESS

    def __post_init__(self) -> None:
        if self.k < 2:
            raise ValueError(f"k must be at least 2 (got {self.k}); k = 1 anonymizes nothing")
        if not 0 <= self.max_emit_length <= 64:
            raise ValueError("max_emit_length must lie in 0..64")
        object.__setattr__(self, "stat", Stat(self.stat))
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "residual", ResidualPolicy(self.residual))


class TrieNode:
    __slots__ = ("key", "length", "series", "children")

    def __init__(self, key: int, length: int, series: np.ndarray, children=()):
        self.key = key  # 64-bit subnet value, bits past `length` zero
        self.length = length
        self.series = series
        self.children: list[TrieNode] = list(children)

    @property
    def prefix(self) -> Prefix:
        return Prefix(self.key << 64, self.length)

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def walk(self):
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def __repr__(self) -> str:
        return f"TrieNode({self.prefix}, children={len(self.children)})"


def _mask64(length: int) -> int:
    return ((1 << 64) - 1) ^ ((1 << (64 - length)) - 1)


def build_trie(per64: Mapping[int, np.ndarray]) -> Optional[TrieNode]:
    """Path-compressed trie over 64-bit subnet keys.

    Branch nodes sit only where keys diverge and start with zero series.
    Returns None for an empty map.
    """
    if not per64:
        return None
    keys = sorted(per64)
    f = len(per64[keys[0]])
    for key in keys:
        if len(per64[key]) != f:
            raise ValueError("all series must share the same length")
        if not 0 <= key < 1 << 64:
            raise ValueError(f"subnet key {key:#x} is not a 64-bit value")

    def build(lo: int, hi: int) -> TrieNode:
        if hi - lo == 1:
            key = keys[lo]
            return TrieNode(key, 64, np.asarray(per64[key]))
        cpl = 64 - (keys[lo] ^ keys[hi - 1]).bit_length()
        base = keys[lo] & _mask64(cpl)
        split = bisect_left(keys, base | (1 << (63 - cpl)), lo, hi)
        return TrieNode(
            base, cpl, np.zeros(f, dtype=np.int64), (build(lo, split), build(split, hi))
        )

    return build(0, len(keys))


@dataclass(frozen=True)
class AggregateEntry:
    prefix: Prefix
    stat_min: int
    stat_median: int
    stat_max: int
    # final series of the node; kept for audits, not written to files
    series: Optional[np.ndarray] = field(default=None, compare=False, repr=False)

    def stat(self, stat: Stat) -> int:
        stat = Stat(stat)
        return {Stat.MIN: self.stat_min, Stat.MEDIAN: self.stat_median, Stat.MAX: self.stat_max}[stat]


@dataclass
class AggregateSet:
    entries: list[AggregateEntry]
    config: KipConfig
    grid: TimeGrid
    catchall: Optional[Prefix] = None  # set under the root residual policy
    residual: Optional[np.ndarray] = field(default=None, compare=False, repr=False)
    version: str = field(default=TOOL_VERSION, compare=False)

    def __post_init__(self) -> None:
        self.entries = sorted(self.entries, key=lambda e: e.prefix)
        seen = set()
        for e in self.entries:
            if e.prefix in seen:
                raise ValueError(f"duplicate prefix {e.prefix}")
            seen.add(e.prefix)

    @property
    def prefixes(self) -> list[Prefix]:
        return [e.prefix for e in self.entries]

    def __len__(self) -> int:
        return len(self.entries)


def synthesize_aggregates(
    root: Optional[TrieNode], cfg: KipConfig, grid: TimeGrid
) -> AggregateSet:
    if grid.fenceposts < 1:
        raise UnsupportedWindowError("aggregation needs at least two intervals (w >= 2)")
    f = grid.fenceposts
    entries: list[AggregateEntry] = []
    if root is None:
        return AggregateSet([], cfg, grid, residual=np.zeros(f, dtype=np.int64))

    def visit(node: TrieNode) -> np.ndarray:
        # returns the mass this node passes up (zeros once emitted)
        total = np.array(node.series, dtype=np.int64, copy=True)
        for child in node.children:
            total += visit(child)
        if node.length <= cfg.max_emit_length and series_stat(total, cfg.stat) >= cfg.k:
            lo, med, hi = series_stats(total)
            entries.append(AggregateEntry(node.prefix, lo, med, hi, total))
            return np.zeros(f, dtype=np.int64)
        return total

    if len(root.series) != f:
        raise ValueError(f"trie series length {len(root.series)} != fenceposts {f}")
    residual = visit(root)
    catchall = None
    if cfg.residual is ResidualPolicy.ROOT and residual.any():
        catchall = root.prefix
    return AggregateSet(entries, cfg, grid, catchall=catchall, residual=residual)


def per64_series(analysis: NetworkAnalysis, mode: Mode) -> dict[int, np.ndarray]:
    """Leaf series for every active /64 under the chosen counting mode."""
    matrix = analysis.prefix_series if Mode(mode) is Mode.PREFIX else analysis.address_series
    return {s: matrix[g] for g, s in enumerate(analysis.subnets)}


def aggregate_network(analysis: NetworkAnalysis, cfg: KipConfig) -> AggregateSet:
    if analysis.grid.fenceposts < 1:
        raise UnsupportedWindowError("aggregation needs at least two intervals (w >= 2)")
    return synthesize_aggregates(build_trie(per64_series(analysis, cfg.mode)), cfg, analysis.grid)


def conservation_holds(aset: AggregateSet, inputs: Sequence[np.ndarray]) -> bool:
    """Emitted plus residual mass equals the input mass, fencepost by fencepost."""
    f = aset.grid.fenceposts
    total_in = np.zeros(f, dtype=np.int64)
    for s in inputs:
        total_in += s
    total_out = np.zeros(f, dtype=np.int64)
    for e in aset.entries:
        total_out += e.series
    if aset.residual is not None:
        total_out += aset.residual
    return bool(np.array_equal(total_in, total_out))
