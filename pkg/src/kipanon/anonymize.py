"""Longest-match truncation of addresses against an aggregate set."""
from __future__ import annotations

from dataclasses import dataclass
from typing import IO, Iterable, Iterator, Optional

from .addrmodel import (
    AddressLike,
    AddressParseError,
    Prefix,
    address_value,
    format_address,
    mask_for,
)
from .kaggregate import AggregateSet, ResidualPolicy

DEFAULT_SENTINEL = "suppressed"


class PrefixMatcher:
    """Binary trie answering the longest stored prefix containing an address.

    Nodes are ``[zero_child, one_child, stored_length_or_None]`` lists.
    """

    def __init__(self, prefixes: Iterable[Prefix] = ()):
        self._root: list = [None, None, None]
        self._count = 0
        for p in prefixes:
            self.insert(p)

    def insert(self, prefix: Prefix) -> None:
        node = self._root
        base = prefix.base
        for depth in range(prefix.length):
            bit = (base >> (127 - depth)) & 1
            if node[bit] is None:
                node[bit] = [None, None, None]
            node = node[bit]
        if node[2] is not None:
            raise ValueError(f"duplicate prefix {prefix}")
        node[2] = prefix.length
        self._count += 1

    def __len__(self) -> int:
        return self._count

    def longest_match(self, a: AddressLike) -> Optional[Prefix]:
        value = int(a)
        node = self._root
        best = node[2]
        depth = 0
        while True:
            node = node[(value >> (127 - depth)) & 1]
            if node is None:
                break
            depth += 1
            if node[2] is not None:
                best = node[2]
            if depth == 128:
                break
        if best is None:
            return None
        return Prefix(value & mask_for(best), best)


def build_matcher(aset: AggregateSet) -> PrefixMatcher:
    return PrefixMatcher(aset.prefixes)


@dataclass(frozen=True)
class AnonymizedAddress:
    output: Optional[int]  # None when suppressed
    matched_length: Optional[int]  # None when suppressed

    @property
    def suppressed(self) -> bool:
        return self.output is None

    def text(self, with_length: bool = False, sentinel: str = DEFAULT_SENTINEL) -> str:
        if self.output is None:
            return sentinel
        out = format_address(self.output)
        return f"{out}/{self.matched_length}" if with_length else out


SUPPRESSED = AnonymizedAddress(None, None)


def anonymize_address(
    a: AddressLike,
    matcher: PrefixMatcher,
    policy: ResidualPolicy = ResidualPolicy.SUPPRESS,
    catchall: Optional[Prefix] = None,
) -> AnonymizedAddress:
    hit = matcher.longest_match(a)
    if hit is not None:
        return AnonymizedAddress(hit.base, hit.length)
    if ResidualPolicy(policy) is ResidualPolicy.ROOT:
        length = catchall.length if catchall is not None else 0
        return AnonymizedAddress(int(a) & mask_for(length), length)
    return SUPPRESSED


class Anonymizer:
    """Anonymizes addresses against one aggregate set, memoized per /64.

    Every aggregate is at most a /64, so addresses sharing their first 64
    bits always share a result.
    """

    def __init__(self, aset: AggregateSet, sentinel: str = DEFAULT_SENTINEL, with_length: bool = False):
        self.aset = aset
        self.matcher = build_matcher(aset)
        self.policy = aset.config.residual
        self.sentinel = sentinel
        self.with_length = with_length
        self._by64: dict[int, AnonymizedAddress] = {}
        self._text64: dict[int, str] = {}
        self._text_cache: dict[str, str] = {}
        self.suppressed = 0
        self.unparsed = 0

    def anonymize(self, a: AddressLike) -> AnonymizedAddress:
        value = int(a)
        key = value >> 64
        hit = self._by64.get(key)
        if hit is None:
            hit = anonymize_address(value, self.matcher, self.policy, self.aset.catchall)
            self._by64[key] = hit
        return hit

    def _field(self, text: str) -> str:
        out = self._text_cache.get(text)
        if out is not None:
            return out
        try:
            value = address_value(text)
        except AddressParseError:
            self.unparsed += 1
            return self.sentinel
        key = value >> 64
        out = self._text64.get(key)
        if out is None:
            out = self._text64[key] = self.anonymize(value).text(self.with_length, self.sentinel)
        if len(self._text_cache) < 1 << 22:
            self._text_cache[text] = out
        return out

    def filter_lines(self, lines: Iterable[str], field: int = 1, sep: str = "\t") -> Iterator[str]:
        """Rewrite the address column of each line, leaving every other byte
        (including the line ending) untouched."""
        sentinel = self.sentinel
        for line in lines:
            body = line.rstrip("\r\n")
            ending = line[len(body):]
            parts = body.split(sep)
            if field >= len(parts):
                yield line
                continue
            out = self._field(parts[field])
            if out == sentinel:
                self.suppressed += 1
            parts[field] = out
            yield sep.join(parts) + ending


def anonymize_stream(
    aset: AggregateSet,
    src: IO[str],
    dst: IO[str],
    field: int = 1,
    sentinel: str = DEFAULT_SENTINEL,
    with_length: bool = False,
) -> Anonymizer:
    anon = Anonymizer(aset, sentinel, with_length)
    dst.writelines(anon.filter_lines(src, field))
    return anon
