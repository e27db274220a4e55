"""Price response functions and pip-spread grouping for spot FX quote data."""

__version__ = "0.1.0"

from .ingest import IngestStats, MarketWeek, QuoteTick, WeekTicks, iter_weeks, parse_line, scan_file
from .pairmeta import PairMeta, assign_group, default_registry, lookup_pair
from .response import (
    ResponseAccumulator,
    ResponseCurve,
    SpreadStat,
    group_average,
    pip_spread_stat,
    response_physical,
    response_trade,
    returns,
)
from .signs import classify_physical_scale, classify_trade_scale
from .timescales import to_physical_scale, to_trade_scale

__all__ = [
    "IngestStats",
    "MarketWeek",
    "PairMeta",
    "QuoteTick",
    "ResponseAccumulator",
    "ResponseCurve",
    "SpreadStat",
    "WeekTicks",
    "assign_group",
    "classify_physical_scale",
    "classify_trade_scale",
    "default_registry",
    "group_average",
    "iter_weeks",
    "lookup_pair",
    "parse_line",
    "pip_spread_stat",
    "response_physical",
    "response_trade",
    "returns",
    "scan_file",
    "to_physical_scale",
    "to_trade_scale",
]
