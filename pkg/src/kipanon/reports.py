"""Network summaries and aggregate prefix-length distributions."""
from __future__ import annotations

import enum
from collections import Counter
from dataclasses import asdict, dataclass
from typing import Iterable, Optional

import numpy as np

from .activity import ActivityTable, NetworkAnalysis, series_stat
from .anonymize import PrefixMatcher
from .kaggregate import AggregateSet


class Weighting(str, enum.Enum):
    AGGREGATE = "aggregate"
    COVERED64 = "covered64"


@dataclass(frozen=True)
class NetworkSummary:
    active_48s: int = 0
    active_64s: int = 0
    active_addresses: int = 0
    prefix_bound_max: int = 0
    prefix_bound_median: int = 0
    address_bound_max: int = 0
    address_bound_median: int = 0

    def as_tsv(self) -> str:
        return "".join(f"{k}\t{v}\n" for k, v in asdict(self).items())

    def as_text(self) -> str:
        return (
            f"active /48 prefixes      {self.active_48s}\n"
            f"active /64 prefixes      {self.active_64s}\n"
            f"active addresses         {self.active_addresses}\n"
            f"simultaneous /64 bound   {self.prefix_bound_max} ({self.prefix_bound_median})\n"
            f"simultaneous addr bound  {self.address_bound_max} ({self.address_bound_median})\n"
        )


def summarize(table: ActivityTable, analysis: Optional[NetworkAnalysis] = None) -> NetworkSummary:
    """Activity counts plus max (median) of the network-wide fencepost
    lower bounds for /64 prefixes and for addresses."""
    if not len(table):
        return NetworkSummary()
    analysis = analysis or NetworkAnalysis(table)
    n48 = len({s >> 16 for s in analysis.subnets})
    prefix_bound = address_bound = (0, 0)
    if analysis.grid.fenceposts >= 1:
        ps = analysis.prefix_series.sum(axis=0, dtype=np.int64)
        ad = analysis.address_series.sum(axis=0, dtype=np.int64)
        prefix_bound = (series_stat(ps, "max"), series_stat(ps, "median"))
        address_bound = (series_stat(ad, "max"), series_stat(ad, "median"))
    return NetworkSummary(
        active_48s=n48,
        active_64s=analysis.n_groups,
        active_addresses=analysis.address_total,
        prefix_bound_max=prefix_bound[0],
        prefix_bound_median=prefix_bound[1],
        address_bound_max=address_bound[0],
        address_bound_median=address_bound[1],
    )


def covered64_counts(aset: AggregateSet, subnets: Iterable[int]) -> Counter:
    """How many of the given /64s land in each aggregate by longest match."""
    matcher = PrefixMatcher(aset.prefixes)
    counts: Counter = Counter()
    for s in subnets:
        hit = matcher.longest_match(s << 64)
        if hit is not None:
            counts[hit] += 1
    return counts


def length_distribution(
    aset: AggregateSet,
    weighting: Weighting = Weighting.AGGREGATE,
    subnets: Optional[Iterable[int]] = None,
) -> list[tuple[int, int, float]]:
    """Rows of ``(length, count, cumulative fraction)`` in length order."""
    weighting = Weighting(weighting)
    if not aset.entries:
        raise ValueError("no aggregates to evaluate")
    hist: Counter = Counter()
    if weighting is Weighting.AGGREGATE:
        for e in aset.entries:
            hist[e.prefix.length] += 1
    else:
        if subnets is None:
            raise ValueError("covered64 weighting needs the active /64s")
        for prefix, n in covered64_counts(aset, subnets).items():
            hist[prefix.length] += n
    total = sum(hist.values())
    rows = []
    running = 0
    for length in sorted(hist):
        running += hist[length]
        rows.append((length, hist[length], running / total if total else 0.0))
    return rows


def format_length_rows(rows: list[tuple[int, int, float]]) -> str:
    return "".join(f"{length}\t{count}\t{frac:.6f}\n" for length, count, frac in rows)
