import ipaddress

import pytest
from hypothesis import given, strategies as st

from kipanon.addrmodel import (
    AddressParseError,
    OutOfWindowError,
    Prefix,
    TimeGrid,
    address_value,
    common_prefix_len,
    format_address,
    iid,
    interval_of,
    parse_address,
    parse_instant,
    subnet64,
    truncate_to,
)

addresses = st.integers(min_value=0, max_value=(1 << 128) - 1)
lengths = st.integers(min_value=0, max_value=128)


def test_parse_known_address():
    a = parse_address("2001:db8::117a:e091:b2bd:ca65")
    assert subnet64(a) == 0x20010DB800000000
    assert iid(a) == 0x117AE091B2BDCA65


def test_parse_zero_and_compression():
    assert int(parse_address("::")) == 0
    assert parse_address("2001:db8::1") == parse_address("2001:0db8:0000:0000:0000:0000:0000:0001")
    assert format_address(parse_address("2001:0DB8:0:0::1")) == "2001:db8::1"


@pytest.mark.parametrize("bad", ["", "2001:db8::g1", "1.2.3.4", "2001:db8:::1", "fe80::1%eth0"])
def test_parse_errors_name_token(bad):
    with pytest.raises(AddressParseError) as exc:
        parse_address(bad)
    assert repr(bad.strip()) in str(exc.value)


@given(addresses)
def test_text_round_trip(a):
    assert address_value(format_address(a)) == a


def test_common_prefix_len_examples():
    a = address_value("2001:db8::117a:e091:b2bd:ca65")
    b = address_value("2001:db8::21ad:6d24:641a:1314")
    assert common_prefix_len(a, b) == 66
    assert common_prefix_len(a, a) == 128
    assert common_prefix_len(address_value("8000::"), 0) == 0


@given(addresses, addresses)
def test_common_prefix_len_symmetric_and_bitwise(a, b):
    n = common_prefix_len(a, b)
    assert n == common_prefix_len(b, a)
    assert (n == 128) == (a == b)
    # brute force over the bit strings
    sa, sb = f"{a:0128b}", f"{b:0128b}"
    expect = next((j for j in range(128) if sa[j] != sb[j]), 128)
    assert n == expect


def test_truncate_examples():
    a = address_value("2001:db8:370:128::7")
    assert str(truncate_to(a, 55)) == "2001:db8:370::/55"
    assert truncate_to(a, 128) == Prefix(a, 128)
    assert str(truncate_to(a, 0)) == "::/0"


def test_truncate_rejects_bad_length():
    with pytest.raises(ValueError):
        truncate_to(1, 129)
    with pytest.raises(ValueError):
        truncate_to(1, -1)


@given(addresses, lengths, lengths)
def test_truncation_nests(a, l1, l2):
    lo, hi = sorted((l1, l2))
    outer, inner = truncate_to(a, lo), truncate_to(a, hi)
    assert outer.contains(inner.base)
    assert inner.contains(a)
    assert ipaddress.IPv6Address(inner.base) in ipaddress.IPv6Network(f"{format_address(a)}/{hi}", strict=False)


def test_prefix_rejects_host_bits_and_parses():
    with pytest.raises(ValueError):
        Prefix(address_value("2001:db8::1"), 64)
    p = Prefix.parse("2001:db8:370::/55")
    assert p.length == 55 and str(p) == "2001:db8:370::/55"
    assert Prefix(0, 0) < Prefix(0, 1) < Prefix(1 << 120, 10)


def test_prefix_contains_matches_stdlib():
    p = Prefix.parse("2001:db8:370::/55")
    assert address_value("2001:db8:370:128::9") in p
    assert address_value("2001:db8:370:228::9") not in p


def test_time_grid_fenceposts():
    g = TimeGrid(0, 3600, 24)
    assert g.fenceposts == 23
    assert TimeGrid(0).intervals == 168 and TimeGrid(0).fenceposts == 167
    with pytest.raises(ValueError):
        TimeGrid(0, 0, 1)
    with pytest.raises(ValueError):
        TimeGrid(0, 3600, 0)


def test_interval_of_examples():
    g = TimeGrid(parse_instant("2017-03-25T00:00:00Z"), 3600, 24)
    assert interval_of(g, parse_instant("2017-03-25T08:30:00Z")) == 8
    assert interval_of(g, g.start) == 0
    assert interval_of(g, g.start + 24 * 3600 - 1) == 23
    with pytest.raises(OutOfWindowError):
        interval_of(g, g.start - 1)
    with pytest.raises(OutOfWindowError):
        interval_of(g, g.end)


@given(st.integers(1, 5000), st.integers(1, 50), st.data())
def test_interval_of_monotone_and_onto(step, w, data):
    g = TimeGrid(1000, step, w)
    t1 = data.draw(st.integers(g.start, g.end - 1))
    t2 = data.draw(st.integers(t1, g.end - 1))
    assert interval_of(g, t1) <= interval_of(g, t2)
    assert {interval_of(g, g.interval_start(j)) for j in range(w)} == set(range(w))


def test_parse_instant_forms():
    assert parse_instant("1490400000") == 1490400000
    assert parse_instant("2017-03-25T00:00:00Z") == 1490400000
    assert parse_instant("2017-03-25T01:00:00+01:00") == 1490400000
    assert parse_instant("2017-03-25 00:00:00") == 1490400000
    with pytest.raises(ValueError):
        parse_instant("yesterday")


def test_grid_covering_aligns():
    g = TimeGrid.covering(1490400000 + 100, 1490400000 + 3 * 3600 + 5)
    assert g.start == 1490400000 and g.intervals == 4


def _spellings(a: int, data) -> str:
    exploded = ipaddress.IPv6Address(a).exploded
    style = data.draw(st.sampled_from(["compressed", "exploded", "upper", "v4tail", "mutated"]))
    if style == "compressed":
        return str(ipaddress.IPv6Address(a))
    if style == "exploded":
        return exploded
    if style == "upper":
        return exploded.upper()
    if style == "v4tail":
        return exploded[:30] + str(ipaddress.IPv4Address(a & 0xFFFFFFFF))
    text = list(exploded)
    j = data.draw(st.integers(0, len(text) - 1))
    text[j] = data.draw(st.sampled_from(list("0:g.%x") + [""]))
    return "".join(text)


@given(addresses, st.data())
def test_fast_parse_agrees_with_stdlib(a, data):
    text = _spellings(a, data)
    try:
        expect = int(ipaddress.IPv6Address(text)) if "%" not in text else None
    except ValueError:
        expect = None
    if expect is None:
        with pytest.raises(AddressParseError):
            address_value(text)
    else:
        assert address_value(text) == expect
