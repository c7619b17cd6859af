"""Address, prefix and observation-window value types.

Addresses are handled internally as plain 128-bit ``int`` values; the
public helpers accept either ints or :class:`ipaddress.IPv6Address`.
Prefix lengths are 1-based from the most significant bit, so a ``/55``
keeps bits 1..55.
"""
from __future__ import annotations

import ipaddress
import socket
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Union

ADDRESS_BITS = 128
ALL_ONES = (1 << ADDRESS_BITS) - 1
LOW64 = (1 << 64) - 1

Address128 = ipaddress.IPv6Address
AddressLike = Union[int, ipaddress.IPv6Address]


class AddressParseError(ValueError):
    """Raised for text that is not an IPv6 address."""


class OutOfWindowError(ValueError):
    """Raised when an instant falls outside a :class:`TimeGrid`."""


def parse_address(text: str) -> ipaddress.IPv6Address:
    token = text.strip()
    if "%" in token:
        raise AddressParseError(f"zone identifiers are not supported: {token!r}")
    try:
        return ipaddress.IPv6Address(token)
    except ValueError as exc:
        raise AddressParseError(f"invalid IPv6 address {token!r}: {exc}") from None


def address_value(text: str) -> int:
    """Parse *text* straight to its integer value.

    Uses the platform's ``inet_pton`` for speed and falls back to
    :func:`parse_address` for the error message.
    """
    try:
        return int.from_bytes(socket.inet_pton(socket.AF_INET6, text.strip()), "big")
    except (OSError, ValueError):
        return int(parse_address(text))


def format_address(a: AddressLike) -> str:
    """Canonical lowercase, zero-compressed text."""
    return str(ipaddress.IPv6Address(int(a)))


def iid(a: AddressLike) -> int:
    return int(a) & LOW64


def subnet64(a: AddressLike) -> int:
    """High 64 bits of *a*, as a 64-bit integer."""
    return int(a) >> 64


def mask_for(length: int) -> int:
    if not 0 <= length <= ADDRESS_BITS:
        raise ValueError(f"prefix length {length} outside 0..128")
    return ALL_ONES ^ (ALL_ONES >> length)


def common_prefix_len(a: AddressLike, b: AddressLike) -> int:
    return ADDRESS_BITS - (int(a) ^ int(b)).bit_length()


@dataclass(frozen=True, order=True)
class Prefix:
    """An address prefix; ``base`` is the integer value with host bits zero.

    Ordering is by ``(base, length)``.
    """

    base: int
    length: int

    def __post_init__(self) -> None:
        if not 0 <= self.length <= ADDRESS_BITS:
            raise ValueError(f"prefix length {self.length} outside 0..128")
        if not 0 <= self.base <= ALL_ONES:
            raise ValueError("prefix base is not a 128-bit value")
        if self.base & ~mask_for(self.length) & ALL_ONES:
            raise ValueError(
                f"{format_address(self.base)}/{self.length} has bits set past the prefix length"
            )

    @classmethod
    def parse(cls, text: str) -> "Prefix":
        addr, sep, length = text.strip().partition("/")
        if not sep:
            raise AddressParseError(f"missing '/len' in prefix {text!r}")
        try:
            n = int(length)
        except ValueError:
            raise AddressParseError(f"bad prefix length in {text!r}") from None
        return cls(address_value(addr), n)

    @classmethod
    def from_subnet64(cls, subnet: int, length: int = 64) -> "Prefix":
        """Prefix of *length* (<= 64) over a 64-bit subnet value."""
        return truncate_to(subnet << 64, length)

    @property
    def address(self) -> ipaddress.IPv6Address:
        return ipaddress.IPv6Address(self.base)

    def contains(self, a: AddressLike) -> bool:
        return (int(a) & mask_for(self.length)) == self.base

    def __contains__(self, a: AddressLike) -> bool:
        return self.contains(a)

    def __str__(self) -> str:
        return f"{format_address(self.base)}/{self.length}"


def truncate_to(a: AddressLike, length: int) -> Prefix:
    """Zero every bit after *length* and return the covering prefix."""
    return Prefix(int(a) & mask_for(length), length)


def parse_instant(text: str) -> int:
    """Integer epoch seconds or an ISO-8601 timestamp (naive means UTC)."""
    token = text.strip()
    try:
        return int(token)
    except ValueError:
        pass
    if token.endswith(("Z", "z")):
        token = token[:-1] + "+00:00"
    try:
        dt = datetime.fromisoformat(token)
    except ValueError:
        raise ValueError(f"unparseable timestamp {text!r}") from None
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def format_instant(t: int) -> str:
    return datetime.fromtimestamp(t, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class TimeGrid:
    """Observation window of ``intervals`` slots of ``interval_seconds`` each,
    starting at ``start`` (UTC epoch seconds)."""

    start: int
    interval_seconds: int = 3600
    intervals: int = 168

    def __post_init__(self) -> None:
        if self.interval_seconds <= 0:
            raise ValueError("interval_seconds must be positive")
        if self.intervals <= 0:
            raise ValueError("intervals must be positive")

    @property
    def fenceposts(self) -> int:
        return self.intervals - 1

    @property
    def end(self) -> int:
        """First instant past the window."""
        return self.start + self.intervals * self.interval_seconds

    def contains(self, t: int) -> bool:
        return self.start <= t < self.end

    def interval_start(self, index: int) -> int:
        return self.start + index * self.interval_seconds

    def fencepost_instant(self, p: int) -> int:
        """Boundary between interval *p* and *p + 1*."""
        return self.start + (p + 1) * self.interval_seconds

    @classmethod
    def covering(cls, first: int, last: int, interval_seconds: int = 3600) -> "TimeGrid":
        """Smallest interval-aligned grid containing both instants."""
        start = first - first % interval_seconds
        w = (last - start) // interval_seconds + 1
        return cls(start, interval_seconds, w)


def interval_of(grid: TimeGrid, t: int) -> int:
    if not grid.contains(t):
        raise OutOfWindowError(
            f"instant {t} outside window [{grid.start}, {grid.end})"
        )
    return (t - grid.start) // grid.interval_seconds
