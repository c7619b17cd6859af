"""kIP anonymization of IPv6 activity logs.

Classify addresses, bound the number of simultaneously assigned addresses
and /64 prefixes from interval-binned activity, synthesize prefixes that
each cover at least ``k`` of them, and truncate addresses to their longest
matching prefix.
"""

__version__ = "0.1.0"

from .addrmodel import Prefix, TimeGrid, common_prefix_len, interval_of, parse_address, truncate_to
from .activity import (
    ActivityRow,
    ActivityTable,
    EpisodeRow,
    NetworkAnalysis,
    Stat,
    accumulate,
    build_rows,
    fencepost_series,
    interval_lower_bounds,
    mark_episodes,
    series_stat,
)
from .anonymize import anonymize_address, build_matcher
from .classify import (
    IidClass,
    RandomnessPolicy,
    classify_iid_stateless,
    compute_dpl,
    compute_stable_days,
    distinct_probability,
    plausible_random_set,
    required_distinct_bits,
)
from .kaggregate import AggregateSet, KipConfig, Mode, ResidualPolicy, build_trie, synthesize_aggregates

__all__ = [
    "ActivityRow", "ActivityTable", "AggregateSet", "EpisodeRow", "IidClass", "KipConfig", "Mode",
    "NetworkAnalysis", "Prefix", "RandomnessPolicy", "ResidualPolicy", "Stat", "TimeGrid",
    "accumulate", "anonymize_address", "build_matcher", "build_rows", "build_trie",
    "classify_iid_stateless", "common_prefix_len", "compute_dpl", "compute_stable_days",
    "distinct_probability", "fencepost_series", "interval_lower_bounds", "interval_of",
    "mark_episodes", "parse_address", "plausible_random_set", "required_distinct_bits",
    "series_stat", "synthesize_aggregates", "truncate_to",
]
