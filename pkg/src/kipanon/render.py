"""Text rendering of activity matrices.

Background: '|' every 24th column, '+' every 8th, '-' elsewhere.  Raw
views mark activity with '#'; inferred views use 'X' (short episode),
'>' / '<' (episode start / end) and '@' (assigned throughout).  Below an
inferred matrix come the column totals and the fencepost row ('!' where
the /64 must have been assigned, '?' for the discarded last fencepost).
"""
from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .activity import ActivityRow, EpisodeRow, GroupAnalysis, UnsupportedWindowError
from .activity import interval_lower_bounds, fencepost_series
from .addrmodel import Prefix, TimeGrid, format_address
from .classify import IidClass


def background(w: int) -> list[str]:
    return ["|" if t % 24 == 0 else "+" if t % 8 == 0 else "-" for t in range(w)]


def raw_marks(row: ActivityRow, w: int) -> str:
    cells = background(w)
    for t in row.intervals:
        cells[t] = "#"
    return "".join(cells)


def episode_marks(episodes: Sequence[EpisodeRow], w: int) -> str:
    """Marks for one address (several episodes when it was not bridged)."""
    cells = background(w)
    for e in episodes:
        if e.first == e.last:
            cells[e.first] = "X"
            continue
        cells[e.first] = ">"
        for t in range(e.first + 1, e.last):
            cells[t] = "@"
        cells[e.last] = "<"
    return "".join(cells)


def totals_rows(totals) -> list[str]:
    """Single digits per column; with any value >= 10 the digits are stacked
    over several rows, most significant first, keeping column alignment."""
    values = [int(v) for v in totals]
    width = max((len(str(v)) for v in values), default=1)
    if width == 1:
        return ["".join(str(v) for v in values)]
    padded = [str(v).rjust(width) for v in values]
    return ["".join(p[d] for p in padded) for d in range(width)]


def fencepost_row(series) -> str:
    return "".join("!" if v else "-" for v in series) + "?"


def axis_rows(w: int) -> tuple[str, str]:
    tens = "".join(str(t // 10 % 10) if t % 10 == 0 else " " for t in range(w)).rstrip()
    units = "".join(str(t % 10) for t in range(w))
    return tens, units


def _axis_label(grid: TimeGrid) -> str:
    return "hour of day" if grid.interval_seconds == 3600 else "interval"


def _dpl_text(dpl: Optional[int]) -> str:
    return "-" if dpl is None else str(dpl)


def render_group(
    ga: GroupAnalysis,
    rows: Sequence[ActivityRow],
    grid: TimeGrid,
    view: str = "raw",
    stable_days: Optional[dict[int, int]] = None,
) -> str:
    """One /64's matrix with its DPL and stable-days columns.

    The raw view lists rows by address value; the inferred view lists them
    by first activity and appends the totals and fencepost rows.
    """
    w = grid.intervals
    if view not in ("raw", "inferred"):
        raise ValueError(f"unknown view {view!r}")
    if view == "inferred" and grid.fenceposts < 1:
        raise UnsupportedWindowError("the inferred view needs at least two intervals")
    sd = stable_days or {}
    by_addr = {r.address: r for r in rows}
    episodes: dict[int, list[EpisodeRow]] = {}
    for e in ga.episodes:
        episodes.setdefault(e.address, []).append(e)

    if view == "raw":
        order = sorted(by_addr)
    else:
        order = sorted(by_addr, key=lambda a: (episodes[a][0].first, episodes[a][-1].last, a))

    addr_text = {a: format_address(a) for a in order}
    aw = max([len("IPv6 address")] + [len(t) for t in addr_text.values()])
    dw = max([1] + [len(_dpl_text(ga.dpls[a])) for a in order])
    sw = max([1] + [len(str(sd.get(a, 0))) for a in order])
    lead = aw + 1 + dw + 1 + sw + 1
    tens, units = axis_rows(w)

    lines = [
        " " * (aw + 1) + "D".ljust(dw),
        " " * (aw + 1) + "P".ljust(dw) + " " + "S".ljust(sw) + " " + " " * 6 + _axis_label(grid),
        "IPv6 address".ljust(aw) + " " + "L".ljust(dw) + " " + "D".ljust(sw) + " " + tens,
        "-" * aw + " " + "-" * dw + " " + "-" * sw + " " + units,
    ]
    for a in order:
        marks = raw_marks(by_addr[a], w) if view == "raw" else episode_marks(episodes[a], w)
        lines.append(
            f"{addr_text[a].ljust(aw)} {_dpl_text(ga.dpls[a]).rjust(dw)} "
            f"{str(sd.get(a, 0)).rjust(sw)} {marks}"
        )
    if view == "inferred":
        all_eps = ga.episodes
        for row in totals_rows(interval_lower_bounds(all_eps, grid)):
            lines.append(" " * lead + row)
        lines.append(" " * lead + "".join(background(w)))
        lines.append(" " * lead + fencepost_row(fencepost_series(all_eps, grid)))
    n = len(order)
    randomized = sum(1 for a in order if ga.classes[a] is IidClass.RANDOMIZED)
    pct = 100.0 * randomized / n if n else 0.0
    lines.append(f"{Prefix.from_subnet64(ga.subnet)} {n}; Temporary SLAAC: {pct:.2f}%")
    return "\n".join(lines) + "\n"


def totals_string(episodes: Sequence[EpisodeRow], grid: TimeGrid) -> str:
    return "\n".join(totals_rows(interval_lower_bounds(episodes, grid)))


def fencepost_string(episodes: Sequence[EpisodeRow], grid: TimeGrid) -> str:
    return fencepost_row(fencepost_series(episodes, grid))


def series_row(series: np.ndarray) -> str:
    """Fencepost series of one /64 in the tree view: '!' or '-'
    per fencepost followed by a blank for the discarded last one."""
    return "".join("!" if v else "-" for v in series) + " "
