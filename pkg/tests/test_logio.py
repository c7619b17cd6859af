import io
import ipaddress

import pytest
from hypothesis import given, strategies as st

from kipanon.activity import ActivityTable
from kipanon.addrmodel import Prefix, TimeGrid, address_value
from kipanon.kaggregate import AggregateEntry, AggregateSet, KipConfig, Mode, ResidualPolicy
from kipanon.logio import (
    FormatError,
    LogEvent,
    LogStats,
    format_aggregates,
    ingest,
    parse_log,
    read_aggregates,
    scan_time_range,
)

from conftest import DAY_START, day_log_lines, load_day_matrix

GRID = TimeGrid(DAY_START, 3600, 24)

GOLDEN = """\
# kipanon aggregate set
# version: kipanon 0.1.0
# k: 2
# stat: min
# mode: prefix
# max-emit-length: 64
# grid-start: 1490400000
# interval-seconds: 3600
# intervals: 24
# residual: suppress
2001:db8:370::/55\t2\t2\t2
"""


def test_parse_log_examples():
    stats = LogStats()
    lines = [
        "1490400000\t2001:db8::1\n",
        "garbage line\n",
        f"{DAY_START - 1}\t2001:db8::1\n",
        "2017-03-25T01:00:00Z\t2001:db8::2\textra\n",
        "1490400000\tfe80::1%eth0\n",
        "1490400000\t1.2.3.4\n",
        f"{GRID.end}\t2001:db8::1\n",
    ]
    events = list(parse_log(lines, GRID, stats))
    assert events == [
        LogEvent(DAY_START, address_value("2001:db8::1")),
        LogEvent(DAY_START + 3600, address_value("2001:db8::2")),
    ]
    assert (stats.lines, stats.parsed, stats.malformed, stats.out_of_window) == (7, 2, 3, 2)
    assert stats.balanced()
    assert stats.as_text() == "lines=7 parsed=2 malformed=3 out_of_window=2"


line_parts = st.one_of(
    st.integers(DAY_START - 7200, DAY_START + 30 * 3600).map(str),
    st.sampled_from(["", "x", "2017-03-25T03:00:00Z", "12_3"]),
)
addr_parts = st.one_of(
    st.integers(0, (1 << 128) - 1).map(lambda a: str(ipaddress.IPv6Address(a))),
    st.sampled_from(["", "nonsense", "::1%lo", " 2001:db8::1 "]),
)


@given(st.lists(st.tuples(line_parts, addr_parts, st.booleans()), max_size=40))
def test_ingest_matches_parse_log(rows):
    lines = [f"{t}\t{a}" + ("\n" if nl else "") if a or t else "bare" for t, a, nl in rows]
    stats = LogStats()
    table = ActivityTable(GRID)
    for ev in parse_log(lines, GRID, stats):
        table.add(ev.address, ev.timestamp)
    fast, fstats = ingest(lines, GRID)
    assert fstats == stats and fstats.balanced()
    assert fast.masks == table.masks and fast.days == table.days


def test_ingest_day_log():
    table, stats = ingest(day_log_lines(), GRID)
    assert stats.parsed == stats.lines == sum(bin(m).count("1") for m in table.masks.values())
    assert len(table.masks) == 16


def test_scan_time_range():
    hours = [h for *_, hs in load_day_matrix() for h in hs]
    expect = (DAY_START + min(hours) * 3600 + 1800, DAY_START + max(hours) * 3600 + 1800)
    assert scan_time_range(day_log_lines()) == expect
    assert scan_time_range(["junk\n"]) is None


def make_set(**kw):
    entries = [AggregateEntry(Prefix.parse("2001:db8:370::/55"), 2, 2, 2)]
    return AggregateSet(entries, KipConfig(k=2, **kw), GRID)


def test_golden_file():
    assert format_aggregates(make_set()) == GOLDEN
    assert format_aggregates(make_set()) == format_aggregates(make_set())


def test_round_trip_is_field_for_field():
    aset = AggregateSet(
        [
            AggregateEntry(Prefix.parse("2001:db8::/40"), 3, 4, 9),
            AggregateEntry(Prefix.parse("2001:db8:ff::/48"), 2, 2, 5),
        ],
        KipConfig(k=3, stat="median", mode=Mode.ADDRESS, max_emit_length=60, residual=ResidualPolicy.ROOT),
        TimeGrid(1000, 60, 9),
        catchall=Prefix.parse("2001:db8::/32"),
    )
    back = read_aggregates(io.StringIO(format_aggregates(aset)))
    assert back == aset and back.version == aset.version
    assert format_aggregates(back) == format_aggregates(aset)


@given(st.sets(st.tuples(st.integers(0, (1 << 128) - 1), st.integers(0, 64)), max_size=10))
def test_round_trip_property(raw):
    from kipanon.addrmodel import truncate_to

    prefixes = {truncate_to(a, n) for a, n in raw}
    aset = AggregateSet([AggregateEntry(p, 2, 3, 4) for p in prefixes], KipConfig(), GRID)
    assert read_aggregates(io.StringIO(format_aggregates(aset))) == aset


def test_read_errors():
    with pytest.raises(FormatError):
        read_aggregates(io.StringIO("# k: 2\n"))
    with pytest.raises(FormatError):
        read_aggregates(io.StringIO(GOLDEN + "2001:db8::/32\t1\n"))
    with pytest.raises(FormatError):
        read_aggregates(io.StringIO(GOLDEN + "2001:db8::1/32\t1\t1\t1\n"))
