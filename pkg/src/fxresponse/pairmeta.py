"""Currency-pair registry: categories, pip scaling factors and spread groups.

The default registry is loaded from ``data/pairs.txt``, a plain comma
separated table with one row per pair. Group thresholds are kept as data so
that a new year can be registered without touching the code.
"""

from __future__ import annotations

import bisect
import enum
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping


class UnknownPair(KeyError):
    """Raised when a symbol is not in the registry."""


class UnknownYear(KeyError):
    """Raised when no group thresholds are registered for a year."""


class Category(str, enum.Enum):
    MAJOR = "Major"
    CROSS = "Cross"
    EXOTIC = "Exotic"


@dataclass(frozen=True)
class PairMeta:
    """Static description of one currency pair.

    Attributes:
        symbol: Pair code such as ``"EUR/USD"``.
        base: Base currency (left of the slash).
        quote: Quote currency (right of the slash).
        category: Major, cross or exotic.
        scaling_factor: Multiplier turning a price difference into pips.
        groups: Spread-group label per year as listed in the bundled pair table.
    """

    symbol: str
    base: str
    quote: str
    category: Category
    scaling_factor: int
    groups: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.symbol != f"{self.base}/{self.quote}" or len(self.base) != 3 or len(self.quote) != 3:
            raise ValueError(f"inconsistent pair code {self.symbol!r}")
        if self.scaling_factor <= 0:
            raise ValueError(f"scaling factor must be positive, got {self.scaling_factor}")
        object.__setattr__(self, "groups", MappingProxyType(dict(self.groups)))

    @property
    def compact(self) -> str:
        """Symbol without the slash, as used in provider file names."""
        return self.base + self.quote

    @property
    def pip(self) -> float:
        """Size of one pip in price units."""
        return 1 / self.scaling_factor

    def to_pips(self, price_diff):
        return to_pips(price_diff, self.scaling_factor)

    def from_pips(self, pips):
        return from_pips(pips, self.scaling_factor)


def to_pips(price_diff, scaling_factor: int):
    """Express a price difference in pips. Decimal inputs stay exact."""
    return price_diff * scaling_factor


def from_pips(pips, scaling_factor: int):
    return pips / scaling_factor


@dataclass(frozen=True)
class GroupThresholds:
    """Pip-spread cut points for one year.

    ``boundaries`` split ``[0, inf)`` into half-open intervals
    ``[0, b1), [b1, b2), ..., [bk, inf)``; a cut point belongs to the upper
    interval.
    """

    year: int
    boundaries: tuple[float, ...]

    def __post_init__(self) -> None:
        b = tuple(float(x) for x in self.boundaries)
        if any(x <= 0 for x in b) or any(hi <= lo for lo, hi in zip(b, b[1:])):
            raise ValueError(f"boundaries must be positive and strictly increasing: {b}")
        object.__setattr__(self, "boundaries", b)

    @property
    def n_groups(self) -> int:
        return len(self.boundaries) + 1

    def group_of(self, avg_pip_spread: float) -> int:
        if not avg_pip_spread >= 0:
            raise ValueError(f"pip spread must be non-negative, got {avg_pip_spread}")
        return bisect.bisect_right(self.boundaries, avg_pip_spread) + 1

    def interval(self, group: int) -> tuple[float, float]:
        """Return ``(low, high)`` of a 1-based group; ``high`` may be inf."""
        edges = (0.0, *self.boundaries, float("inf"))
        if not 1 <= group <= self.n_groups:
            raise ValueError(f"group {group} out of range for {self.year}")
        return edges[group - 1], edges[group]


DEFAULT_THRESHOLDS = {
    2011: GroupThresholds(2011, (10.0,)),
    2015: GroupThresholds(2015, (10.0,)),
    2019: GroupThresholds(2019, (4.0, 10.0)),
}


class PairRegistry:
    """Immutable lookup of pairs and per-year group thresholds."""

    def __init__(self, pairs: Iterable[PairMeta], thresholds: Iterable[GroupThresholds] = ()):
        by_symbol: dict[str, PairMeta] = {}
        for p in pairs:
            if p.symbol in by_symbol:
                raise ValueError(f"duplicate registry entry {p.symbol}")
            by_symbol[p.symbol] = p
        self._pairs = MappingProxyType(by_symbol)
        self._thresholds = MappingProxyType({t.year: t for t in thresholds})

    def __len__(self) -> int:
        return len(self._pairs)

    def __iter__(self):
        return iter(self._pairs.values())

    def __contains__(self, symbol: str) -> bool:
        return symbol in self._pairs

    @property
    def symbols(self) -> list[str]:
        return sorted(self._pairs)

    @property
    def years(self) -> list[int]:
        return sorted(self._thresholds)

    def lookup(self, symbol: str) -> PairMeta:
        try:
            return self._pairs[normalize_symbol(symbol)]
        except (KeyError, ValueError):
            raise UnknownPair(symbol) from None

    def thresholds(self, year: int) -> GroupThresholds:
        try:
            return self._thresholds[int(year)]
        except KeyError:
            raise UnknownYear(year) from None

    def assign_group(self, avg_pip_spread: float, year: int) -> int:
        return self.thresholds(year).group_of(avg_pip_spread)

    def with_thresholds(self, *thresholds: GroupThresholds) -> "PairRegistry":
        merged = dict(self._thresholds)
        merged.update({t.year: t for t in thresholds})
        return PairRegistry(self._pairs.values(), merged.values())

    def with_pairs(self, *pairs: PairMeta) -> "PairRegistry":
        merged = dict(self._pairs)
        merged.update({p.symbol: p for p in pairs})
        return PairRegistry(merged.values(), self._thresholds.values())


def normalize_symbol(symbol: str) -> str:
    """Accept ``EUR/USD``, ``eurusd`` or ``EUR_USD`` and return ``EUR/USD``."""
    s = symbol.strip().upper()
    if len(s) == 7 and s[3] in "/_-":
        s = s[:3] + s[4:]
    if len(s) != 6 or not s.isalpha():
        raise ValueError(f"not a pair code: {symbol!r}")
    return f"{s[:3]}/{s[3:]}"


def parse_pair_table(text: str) -> list[PairMeta]:
    """Parse the comma separated pair table.

    The first non-comment line is a header ``symbol, category,
    scaling_factor, <year>, <year>, ...``; each year column holds a ``G<k>``
    label (or ``-`` when the pair was not grouped that year).
    """
    rows = [ln for ln in (raw.split("#", 1)[0].strip() for raw in text.splitlines()) if ln]
    if not rows:
        return []
    header = [c.strip().lower() for c in rows[0].split(",")]
    if header[:3] != ["symbol", "category", "scaling_factor"]:
        raise ValueError(f"unexpected header {rows[0]!r}")
    years = [int(y) for y in header[3:]]
    out = []
    for row in rows[1:]:
        cells = [c.strip() for c in row.split(",")]
        if len(cells) != len(header):
            raise ValueError(f"expected {len(header)} columns: {row!r}")
        symbol = normalize_symbol(cells[0])
        groups = {}
        for year, label in zip(years, cells[3:]):
            if label in ("", "-"):
                continue
            if not (label[0] in "Gg" and label[1:].isdigit()):
                raise ValueError(f"bad group label {label!r} in {row!r}")
            groups[year] = int(label[1:])
        out.append(PairMeta(
            symbol=symbol,
            base=symbol[:3],
            quote=symbol[4:],
            category=Category(cells[1].capitalize()),
            scaling_factor=int(cells[2]),
            groups=groups,
        ))
    return out


def parse_thresholds(text: str) -> list[GroupThresholds]:
    """Parse ``year = b1, b2`` lines into thresholds."""
    out = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        year, _, rest = line.partition("=")
        bounds = tuple(float(x) for x in rest.split(",") if x.strip())
        out.append(GroupThresholds(int(year), bounds))
    return out


def load_registry(path: str | Path | None = None, thresholds_path: str | Path | None = None) -> PairRegistry:
    """Build a registry from a pair table file (default: the bundled table)."""
    if path is None:
        return default_registry() if thresholds_path is None else default_registry().with_thresholds(
            *parse_thresholds(Path(thresholds_path).read_text())
        )
    pairs = parse_pair_table(Path(path).read_text())
    reg = PairRegistry(pairs, DEFAULT_THRESHOLDS.values())
    if thresholds_path is not None:
        reg = reg.with_thresholds(*parse_thresholds(Path(thresholds_path).read_text()))
    return reg


@lru_cache(maxsize=1)
def default_registry() -> PairRegistry:
    text = resources.files("fxresponse").joinpath("data/pairs.txt").read_text()
    return PairRegistry(parse_pair_table(text), DEFAULT_THRESHOLDS.values())


def lookup_pair(symbol: str) -> PairMeta:
    return default_registry().lookup(symbol)


def assign_group(avg_pip_spread: float, year: int) -> int:
    return default_registry().assign_group(avg_pip_spread, year)


MAJORS = ("EUR/USD", "GBP/USD", "USD/JPY", "AUD/USD", "USD/CHF", "USD/CAD", "NZD/USD")
