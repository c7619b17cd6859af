"""Interface-identifier classification, DPL / stable-days metrics and the
distinct-bit-string test for pseudorandom IIDs within a /64."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .addrmodel import AddressLike, LOW64, common_prefix_len, format_address, subnet64

# past this many addresses the product is evaluated as a sum of logs
_LOG_THRESHOLD = 1000


class IidClass(str, enum.Enum):
    IEEE_DERIVED = "ieee-derived"
    EMBEDDED_IPV4 = "embedded-ipv4"
    LOW_BYTE = "low-byte"
    PATTERN_BYTES = "pattern-bytes"
    RANDOMIZED = "randomized"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class AddressClassification:
    iid_class: IidClass
    dpl: Optional[int]  # None when the address has no observed neighbour
    stable_days: int


def _iid_bytes(a: AddressLike) -> bytes:
    return (int(a) & LOW64).to_bytes(8, "big")


def _embeds_ipv4(b: bytes) -> bool:
    if b[:4] == b"\0\0\0\0" and b[4] != 0:
        return True
    # each 16-bit word written as a decimal octet, e.g. 2001:db8::192:168:1:1
    hx = b.hex()
    if not hx.isdigit():
        return False
    words = [int(hx[j:j + 4]) for j in range(0, 16, 4)]
    return words[0] != 0 and all(w <= 255 for w in words)


def classify_iid_stateless(a: AddressLike) -> IidClass:
    """Structural IID class, tested in a fixed order; anything without a
    recognisable structure is a randomized candidate."""
    b = _iid_bytes(a)
    if b[3] == 0xFF and b[4] == 0xFE:
        return IidClass.IEEE_DERIVED
    if _embeds_ipv4(b):
        return IidClass.EMBEDDED_IPV4
    if b[:6] == b"\0\0\0\0\0\0":
        return IidClass.LOW_BYTE
    # four equal bytes leave at most five distinct values
    if len(set(b)) <= 5 and max(b.count(v) for v in set(b)) >= 4:
        return IidClass.PATTERN_BYTES
    return IidClass.RANDOMIZED


def compute_dpl(a: AddressLike, others: Iterable[AddressLike]) -> Optional[int]:
    best = -1
    for o in others:
        best = max(best, common_prefix_len(a, o))
    if best < 0:
        return None
    if best == 128:
        raise ValueError(f"{format_address(a)} appears among its own neighbours")
    return best + 1


def dpl_by_address(addrs: Iterable[int]) -> dict[int, Optional[int]]:
    """DPL of every address in a set.

    The nearest neighbour of an address is always adjacent to it in sorted
    order, so one pass over the sorted values suffices.
    """
    ordered = sorted(set(int(a) for a in addrs))
    n = len(ordered)
    if n == 1:
        return {ordered[0]: None}
    result: dict[int, Optional[int]] = {}
    # cpl(x, y) = 128 - (x ^ y).bit_length(); a smaller xor means a longer match
    prev_xor = None
    for j, a in enumerate(ordered):
        next_xor = a ^ ordered[j + 1] if j + 1 < n else None
        if prev_xor is None:
            x = next_xor
        elif next_xor is None:
            x = prev_xor
        else:
            x = min(prev_xor, next_xor)
        result[a] = 129 - x.bit_length()
        prev_xor = next_xor
    return result


def compute_stable_days(active_days: Iterable) -> int:
    days = set(active_days)
    if not days:
        raise ValueError("stable days need at least one active day")
    return len(days) - 1


def distinct_probability(A: int, N: int) -> float:
    """Probability that A uniformly random N-bit strings are pairwise distinct."""
    if A < 1 or N < 0:
        raise ValueError("need A >= 1 and N >= 0")
    S = 1 << N
    if A > S:
        return 0.0
    if A <= _LOG_THRESHOLD:
        p = 1.0
        for j in range(1, A):
            p *= (S - j) / S
        return p
    j = np.arange(1, A, dtype=np.float64)
    return float(math.exp(np.log1p(-j / float(S)).sum()))


def required_distinct_bits(A: int, confidence: float = 0.99) -> int:
    """Smallest N such that A random N-bit strings are distinct with at
    least *confidence* probability."""
    if A < 2:
        raise ValueError("need at least two addresses")
    if not 0.0 < confidence < 1.0:
        raise ValueError("confidence must lie strictly between 0 and 1")
    N = max(0, (A - 1).bit_length())
    while distinct_probability(A, N) < confidence:
        N += 1
    return N


@dataclass
class RandomnessPolicy:
    confidence: float = 0.99
    table_size: int = 10**6
    _extra: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not 0.0 < self.confidence < 1.0:
            raise ValueError("confidence must lie strictly between 0 and 1")

    @cached_property
    def table(self) -> np.ndarray:
        """``table[A]`` = required bits for A addresses, A in 2..table_size.

        Built per N from the running sum of log terms: for fixed N the
        log-probability only falls as A grows, so the A values it serves form
        a prefix of the range.
        """
        size = self.table_size
        out = np.zeros(size + 1, dtype=np.int16)
        log_conf = math.log(self.confidence)
        j = np.arange(0, size, dtype=np.float64)  # term j multiplies in for A = j + 1
        filled = 1  # table holds answers for A <= filled
        N = 1
        while filled < size:
            S = float(1 << N)
            limit = min(size, 1 << N)
            logp = np.cumsum(np.log1p(-j[:limit] / S))  # logp[A - 1] = log P(A, N)
            a_max = int(np.searchsorted(-logp, -log_conf, side="right"))
            if a_max > filled:
                out[filled + 1:a_max + 1] = N
                filled = a_max
            N += 1
        return out

    def required_bits(self, A: int) -> int:
        if A < 2:
            raise ValueError("need at least two addresses")
        if A <= self.table_size:
            return int(self.table[A])
        if A not in self._extra:
            self._extra[A] = required_distinct_bits(A, self.confidence)
        return self._extra[A]

    def max_dpl(self, A: int) -> int:
        # the string starts at the first IID bit and so spans the fixed
        # universal/local bit, which costs one extra DPL bit
        return 64 + 1 + self.required_bits(A)


@lru_cache(maxsize=None)
def default_policy(confidence: float = 0.99) -> RandomnessPolicy:
    """Process-wide policy instance, so its table is built only once."""
    return RandomnessPolicy(confidence)


def plausible_random_set(
    addrs: Iterable[AddressLike],
    policy: RandomnessPolicy,
    dpls: Optional[Mapping[int, Optional[int]]] = None,
) -> bool:
    """True when the observed DPLs inside one /64 are consistent with
    pseudorandom IIDs; False only means the inference is withheld."""
    values = sorted(set(int(a) for a in addrs))
    if len(values) < 2:
        raise ValueError("the randomness test needs at least two addresses")
    nets = {subnet64(a) for a in (values[0], values[-1])}
    if len(nets) != 1:
        raise ValueError("addresses span more than one /64")
    if dpls is None:
        dpls = dpl_by_address(values)
    worst = max(dpls[a] for a in values)
    return worst <= policy.max_dpl(len(values))


def classify_addresses(
    addrs: Sequence[int], day_counts: Optional[Mapping[int, int]] = None
) -> dict[int, AddressClassification]:
    """Classify a whole observed population; DPL is relative to all of it."""
    dpls = dpl_by_address(addrs) if addrs else {}
    out = {}
    for a, dpl in dpls.items():
        days = day_counts.get(a, 1) if day_counts else 1
        out[a] = AddressClassification(classify_iid_stateless(a), dpl, max(days - 1, 0))
    return out


def format_classification(a: int, c: AddressClassification) -> str:
    dpl = "-" if c.dpl is None else str(c.dpl)
    return f"{format_address(a)}\t{c.iid_class.value}\t{dpl}\t{c.stable_days}"
