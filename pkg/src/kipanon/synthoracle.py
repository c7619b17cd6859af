"""Synthetic SLAAC-privacy populations with known assignment spans, and an
exact sweep over those spans that referees the inferred lower bounds.

Times are integer epoch seconds; an assignment span ``[on, off)`` is
half-open and contains every activity instant of its address.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .activity import NetworkAnalysis
from .addrmodel import Prefix, TimeGrid, format_address
from .classify import IidClass, classify_iid_stateless

DOC_BASE = 0x20010DB8 << 96  # 2001:db8::/32
UL_BIT = 1 << (64 - 7)  # 7th IID bit, zero in privacy addresses
PRACTICES = ("jp", "dispersed")


@dataclass(frozen=True)
class Assignment:
    address: int
    on: int
    off: int
    activity: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.off <= self.on:
            raise ValueError("assignment span must have positive length")
        for t in self.activity:
            if not self.on <= t < self.off:
                raise ValueError(f"activity at {t} outside span [{self.on}, {self.off})")


@dataclass(frozen=True)
class GroundTruthHost:
    subnet: Prefix
    assignments: tuple[Assignment, ...]


@dataclass(frozen=True)
class SynthParams:
    hosts: int = 100
    practice: str = "dispersed"
    hosts_per_subnet: float = 2.0
    subnets_per_48: int = 16  # dispersed practice only
    lifetime_hours: tuple[float, float] = (2.0, 24.0)
    # next address appears after this fraction of the current lifetime
    renewal_fraction: tuple[float, float] = (0.3, 1.0)
    activity_per_hour: tuple[float, float] = (0.05, 1.0)
    start: int = 1490400000  # 2017-03-25T00:00:00Z
    interval_seconds: int = 3600
    intervals: int = 168
    seed: int = 0

    def __post_init__(self) -> None:
        if self.practice not in PRACTICES:
            raise ValueError(f"practice must be one of {PRACTICES}")
        if self.hosts < 0 or self.hosts_per_subnet <= 0 or self.subnets_per_48 < 1:
            raise ValueError("counts must be positive")
        if self.lifetime_hours[0] <= 0 or self.lifetime_hours[1] < self.lifetime_hours[0]:
            raise ValueError("bad lifetime range")
        lo, hi = self.renewal_fraction
        if not 0 < lo <= hi:
            raise ValueError("bad renewal fraction range")
        if self.activity_per_hour[0] < 0 or self.activity_per_hour[1] < self.activity_per_hour[0]:
            raise ValueError("bad activity rate range")

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid(self.start, self.interval_seconds, self.intervals)


@dataclass
class Scenario:
    grid: TimeGrid
    hosts: list[GroundTruthHost]
    seed: int = 0
    params: Optional[SynthParams] = None

    @property
    def assignments(self) -> list[Assignment]:
        return [a for h in self.hosts for a in h.assignments]

    def log_lines(self) -> list[str]:
        events = sorted((t, a.address) for a in self.assignments for t in a.activity)
        text: dict[int, str] = {}
        out = []
        for t, addr in events:
            s = text.get(addr)
            if s is None:
                s = text[addr] = format_address(addr)
            out.append(f"{t}\t{s}\n")
        return out

    def manifest(self) -> dict:
        m = {"seed": self.seed, "hosts": len(self.hosts), "addresses": len(self.assignments),
             "grid": {"start": self.grid.start, "interval_seconds": self.grid.interval_seconds,
                      "intervals": self.grid.intervals}}
        if self.params is not None:
            m["params"] = asdict(self.params)
        return m

    @classmethod
    def from_spans(cls, grid: TimeGrid, spans: Sequence[tuple[int, int, int, Sequence[int]]], seed: int = 0) -> "Scenario":
        """Hand-built scenario: one host per ``(address, on, off, activity)``."""
        hosts = [
            GroundTruthHost(Prefix((addr >> 64) << 64, 64), (Assignment(addr, on, off, tuple(sorted(act))),))
            for addr, on, off, act in spans
        ]
        return cls(grid, hosts, seed)


def _subnets(rng: np.random.Generator, params: SynthParams, count: int) -> list[int]:
    """Distinct 64-bit subnet values under 2001:db8::/32."""
    base = DOC_BASE >> 64
    if params.practice == "jp":
        # one /48 per customer, bits 48-63 zero
        if count > 1 << 16:
            raise ValueError("jp practice supports at most 65536 customers")
        picks = rng.choice(1 << 16, size=count, replace=False)
        return [base | (int(p) << 16) for p in picks]
    n48 = max(1, math.ceil(count / params.subnets_per_48))
    if n48 > 1 << 16:
        raise ValueError("too many /48s for one /32")
    nets48 = rng.choice(1 << 16, size=n48, replace=False)
    out = []
    for j, n in enumerate(nets48):
        m = min(params.subnets_per_48, count - j * params.subnets_per_48)
        lows = rng.choice(1 << 16, size=m, replace=False)
        out.extend(base | (int(n) << 16) | int(lo) for lo in lows)
    return out


def _random_iid(rng: np.random.Generator, taken: set[int], subnet: int) -> int:
    while True:
        iid = int(rng.integers(0, 1 << 64, dtype=np.uint64)) & ~UL_BIT
        addr = (subnet << 64) | iid
        if addr not in taken and classify_iid_stateless(addr) is IidClass.RANDOMIZED:
            taken.add(addr)
            return addr


def generate(params: SynthParams) -> Scenario:
    """Deterministic scenario for ``params.seed``."""
    rng = np.random.default_rng(params.seed)
    grid = params.grid
    if params.hosts == 0:
        return Scenario(grid, [], params.seed, params)
    customers = max(1, math.ceil(params.hosts / params.hosts_per_subnet))
    nets = _subnets(rng, params, customers)
    owner = np.concatenate([
        np.arange(min(customers, params.hosts)),
        rng.integers(0, customers, size=max(0, params.hosts - customers)),
    ])
    taken: set[int] = set()
    hosts = []
    lo_life, hi_life = (h * 3600.0 for h in params.lifetime_hours)
    for j in range(params.hosts):
        subnet = nets[int(owner[j])]
        rate = rng.uniform(*params.activity_per_hour) / 3600.0
        on = grid.start - rng.uniform(0, hi_life)
        assigns = []
        while on < grid.end:
            life = rng.uniform(lo_life, hi_life)
            t_on, t_off = int(on), int(on + life) + 1
            lo, hi = max(t_on, grid.start), min(t_off, grid.end)
            acts: tuple[int, ...] = ()
            if hi > lo:
                n = rng.poisson(rate * (hi - lo))
                acts = tuple(sorted(int(x) for x in rng.integers(lo, hi, size=n)))
            assigns.append(Assignment(_random_iid(rng, taken, subnet), t_on, t_off, acts))
            on += life * rng.uniform(*params.renewal_fraction)
        hosts.append(GroundTruthHost(Prefix(subnet << 64, 64), tuple(assigns)))
    return Scenario(grid, hosts, params.seed, params)


# -- exact oracle ------------------------------------------------------------


@dataclass
class Truth:
    """Exact concurrency from ground-truth spans.

    ``interval[t]``: max assigned addresses at any instant of the closed
    interval ``[start_t, start_{t+1}]``; ``fencepost[p]``: assigned addresses
    at the boundary after interval p; ``fencepost_prefixes[p]``: /64s with
    at least one assigned address there.  ``per64_*`` hold the same per /64,
    rows ordered as ``subnets``.
    """

    interval: np.ndarray
    fencepost: np.ndarray
    fencepost_prefixes: np.ndarray
    subnets: list[int]
    per64_interval: np.ndarray
    per64_fencepost: np.ndarray


def _sweep(group: np.ndarray, on: np.ndarray, off: np.ndarray, n_groups: int, grid: TimeGrid):
    """Per group: counts at the w + 1 boundaries and max over each closed interval.

    Groups are laid end to end on one time axis so a single sorted sweep
    serves all of them.
    """
    w, step = grid.intervals, grid.interval_seconds
    lo, hi = grid.start - 1, grid.end + 1
    on = np.clip(on, lo, hi)
    off = np.clip(off, lo, hi)
    keep = off > on
    group, on, off = group[keep], on[keep], off[keep]
    width = hi - lo + 1
    shift = group * width
    ons = np.sort(on + shift)
    offs = np.sort(off + shift)

    def count_at(x: np.ndarray) -> np.ndarray:
        # assigned at x: on <= x < off
        return np.searchsorted(ons, x, side="right") - np.searchsorted(offs, x, side="right")

    bounds = grid.start + step * np.arange(w + 1)
    points = (np.arange(n_groups) * width)[:, None] + bounds[None, :]
    at_bounds = count_at(points.ravel()).reshape(n_groups, w + 1)
    best = np.maximum(at_bounds[:, :-1], at_bounds[:, 1:])
    rel = on - grid.start
    inner = (rel > 0) & (rel < w * step) & (rel % step != 0)
    if inner.any():
        vals = count_at((on + shift)[inner])
        np.maximum.at(best, (group[inner], rel[inner] // step), vals)
    return at_bounds, best


def oracle_truth(s: Scenario) -> Truth:
    grid = s.grid
    subnets = sorted({h.subnet.base >> 64 for h in s.hosts})
    index = {sn: g for g, sn in enumerate(subnets)}
    spans = [(index[h.subnet.base >> 64], a.on, a.off) for h in s.hosts for a in h.assignments]
    arr = np.asarray(spans, dtype=np.int64).reshape(-1, 3)
    group, on, off = arr[:, 0], arr[:, 1], arr[:, 2]
    G = len(subnets)
    bounds_all, interval = _sweep(np.zeros_like(group), on, off, 1, grid)
    if G:
        per_bounds, per_interval = _sweep(group, on, off, G, grid)
    else:
        per_bounds = np.zeros((0, grid.intervals + 1), dtype=np.int64)
        per_interval = np.zeros((0, grid.intervals), dtype=np.int64)
    fence = bounds_all[0, 1:grid.intervals]
    per_fence = per_bounds[:, 1:grid.intervals]
    return Truth(
        interval=interval[0],
        fencepost=fence,
        fencepost_prefixes=(per_fence > 0).sum(axis=0),
        subnets=subnets,
        per64_interval=per_interval,
        per64_fencepost=per_fence,
    )


def oracle_interval_truth(s: Scenario) -> np.ndarray:
    return oracle_truth(s).interval


def oracle_fencepost_truth(s: Scenario) -> np.ndarray:
    return oracle_truth(s).fencepost


@dataclass
class SoundnessReport:
    violations: list[str] = field(default_factory=list)
    interval_tightness: float = 1.0  # sum of bounds / sum of truth
    fencepost_tightness: float = 1.0

    @property
    def ok(self) -> bool:
        return not self.violations


def _ratio(bound: np.ndarray, truth: np.ndarray) -> float:
    t = float(truth.sum())
    return float(bound.sum()) / t if t else 1.0


def check_soundness(s: Scenario, analysis: NetworkAnalysis, truth: Optional[Truth] = None) -> SoundnessReport:
    """Compare inferred bounds with the exact truth.

    Interval bounds are checked per /64, where each column's best moment
    is chosen; fencepost series are checked per /64 and summed network-wide,
    since every /64 is counted at the same instant there.
    """
    truth = truth or oracle_truth(s)
    report = SoundnessReport()
    index = {sn: g for g, sn in enumerate(truth.subnets)}
    rows = []
    for g, sn in enumerate(analysis.subnets):
        if sn not in index:
            report.violations.append(f"/64 {Prefix(sn << 64, 64)} observed but absent from truth")
            continue
        rows.append((g, index[sn]))
    if not rows:
        return report
    ag = np.array([r[0] for r in rows])
    tg = np.array([r[1] for r in rows])
    ib, it = analysis.interval_bounds[ag], truth.per64_interval[tg]
    for g, t in zip(*np.nonzero(ib > it)):
        report.violations.append(
            f"interval {t} of {Prefix(analysis.subnets[ag[g]] << 64, 64)}: bound {ib[g, t]} > truth {it[g, t]}"
        )
    report.interval_tightness = _ratio(ib, it)
    if analysis.grid.fenceposts:
        fb, ft = analysis.address_series[ag], truth.per64_fencepost[tg]
        for g, p in zip(*np.nonzero(fb > ft)):
            report.violations.append(
                f"fencepost {p} of {Prefix(analysis.subnets[ag[g]] << 64, 64)}: bound {fb[g, p]} > truth {ft[g, p]}"
            )
        net_addr = analysis.address_series.sum(axis=0)
        net_pfx = analysis.prefix_series.sum(axis=0)
        for p in np.nonzero(net_addr > truth.fencepost)[0]:
            report.violations.append(f"fencepost {p}: address bound {net_addr[p]} > truth {truth.fencepost[p]}")
        for p in np.nonzero(net_pfx > truth.fencepost_prefixes)[0]:
            report.violations.append(
                f"fencepost {p}: /64 bound {net_pfx[p]} > truth {truth.fencepost_prefixes[p]}"
            )
        report.fencepost_tightness = _ratio(net_addr, truth.fencepost)
    return report


def format_truth(truth: Truth) -> str:
    lines = ["# interval_truth"]
    lines += [f"{j}\t{int(v)}" for j, v in enumerate(truth.interval)]
    lines.append("# fencepost_truth")
    lines += [f"{j}\t{int(v)}" for j, v in enumerate(truth.fencepost)]
    lines.append("# fencepost_prefix_truth")
    lines += [f"{j}\t{int(v)}" for j, v in enumerate(truth.fencepost_prefixes)]
    return "\n".join(lines) + "\n"


def format_manifest(s: Scenario) -> str:
    return json.dumps(s.manifest(), indent=2, sort_keys=True) + "\n"
