from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from kipanon.activity import ActivityTable, analyze_group
from kipanon.addrmodel import TimeGrid, address_value

DATA = Path(__file__).parent / "data"

# 2017-03-25T00:00:00Z
DAY_START = 1490400000


def load_day_matrix():
    """Rows of the one-day /64 fixture: (address text, dpl, sd, active hours)."""
    rows = []
    for line in (DATA / "slaac_day_matrix.txt").read_text().splitlines()[4:20]:
        addr, dpl, sd, marks = line.split()
        rows.append((addr, int(dpl), int(sd), [h for h, c in enumerate(marks) if c == "#"]))
    return rows


def day_log_lines(minute: int = 30) -> list[str]:
    out = []
    for addr, _, _, hours in load_day_matrix():
        for h in hours:
            out.append(f"{DAY_START + h * 3600 + minute * 60}\t{addr}\n")
    return sorted(out)


@pytest.fixture(scope="session")
def day_grid() -> TimeGrid:
    return TimeGrid(DAY_START, 3600, 24)


@pytest.fixture(scope="session")
def day_rows():
    return load_day_matrix()


@pytest.fixture
def day_table(day_grid, day_rows) -> ActivityTable:
    table = ActivityTable(day_grid)
    for addr, _, _, hours in day_rows:
        for h in hours:
            table.add(address_value(addr), DAY_START + h * 3600 + 1800)
    return table


@pytest.fixture
def day_group(day_table):
    (subnet, rows), = day_table.rows_by_subnet().items()
    return analyze_group(subnet, rows), rows


def load_meeting_series() -> dict[int, np.ndarray]:
    """The three meeting-network /64s with their 23-fencepost series."""
    out = {}
    for line in (DATA / "meeting_series.txt").read_text().splitlines():
        prefix, marks = line[:25].strip(), line[25:48]
        out[address_value(prefix.split("/")[0]) >> 64] = np.array(
            [1 if c == "!" else 0 for c in marks], dtype=np.int64
        )
    return out


@pytest.fixture
def meeting_series() -> dict[int, np.ndarray]:
    return load_meeting_series()


def meeting_log_lines() -> list[str]:
    """A log whose inferred fencepost series equal the meeting fixture."""
    t = lambda h: DAY_START + h * 3600 + 600  # noqa: E731
    events = [
        (0, "2001:db8:370::8f1e:23aa:91c4:5d07"),
        (23, "2001:db8:370::8f1e:23aa:91c4:5d07"),
        (0, "2001:db8:370:128:4c93:b1e2:7f30:a96d"),
        (23, "2001:db8:370:128:4c93:b1e2:7f30:a96d"),
        (0, "2001:db8:370:228:1b6f:d2c4:e853:907a"),
        (1, "2001:db8:370:228:1b6f:d2c4:e853:907a"),
        (13, "2001:db8:370:228:9a2d:36e1:c5b8:4f12"),
        (14, "2001:db8:370:228:9a2d:36e1:c5b8:4f12"),
    ]
    return [f"{t(h)}\t{a}\n" for h, a in sorted(events)]


# -- acceptance reporting -------------------------------------------------------

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def verdict():
    """Record one pass/fail line for an acceptance criterion, then assert it."""

    def record(number: int, ok: bool, detail: str) -> None:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
