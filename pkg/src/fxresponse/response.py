"""Returns, price response estimators and pip-spread statistics.

The response at lag ``tau`` is the average of ``r(t-1, tau) * eps(t)``: the
return measured from the event (or second) just before the signed one. All
anchors of all weeks fed to an accumulator are pooled into one average, so
weeks with more trades weigh more. Returns never span two weeks.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import _kernels
from .pairmeta import PairMeta

logger = logging.getLogger(__name__)

TRADE = "trade"
PHYSICAL = "physical"
DEFAULT_TAU_MAX = 1000


class OutOfRange(IndexError):
    pass


class NoData(ValueError):
    pass


class EmptyGroup(UserWarning):
    pass


def returns(midpoints: Sequence[float], t: int, tau: int, log: bool = False) -> float:
    """Relative (or log) midpoint change from ``t`` to ``t + tau``."""
    n = len(midpoints)
    if t < 0 or tau < 0 or t + tau >= n:
        raise OutOfRange(f"window [{t}, {t + tau}] outside series of length {n}")
    m0, m1 = midpoints[t], midpoints[t + tau]
    if log:
        return math.log(m1) - math.log(m0)
    return (m1 - m0) / m0


@dataclass
class ResponseCurve:
    """Response per lag ``1..tau_max``; ``NaN`` marks lags without data."""

    scale: str
    values: np.ndarray
    counts: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def taus(self) -> np.ndarray:
        return np.arange(1, len(self.values) + 1)

    @property
    def tau_max(self) -> int:
        return len(self.values)

    def to_csv(self, path: str | Path | None = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["tau", "value", "count"])
        for tau, v, c in zip(self.taus.tolist(), self.values.tolist(), self.counts.tolist()):
            w.writerow([tau, "nan" if math.isnan(v) else repr(v), c])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    def to_dict(self) -> dict:
        return {
            **self.meta,
            "scale": self.scale,
            "tau": self.taus.tolist(),
            "value": [None if math.isnan(v) else v for v in self.values.tolist()],
            "count": self.counts.tolist(),
        }

    def to_json(self, path: str | Path | None = None) -> str:
        text = json.dumps(self.to_dict(), indent=1)
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, path: str | Path, scale: str, meta: dict | None = None) -> "ResponseCurve":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        return cls(
            scale,
            np.array([float(r["value"]) for r in rows]),
            np.array([int(r["count"]) for r in rows], dtype=np.int64),
            dict(meta or {}),
        )

    @classmethod
    def from_json(cls, path: str | Path) -> "ResponseCurve":
        d = json.loads(Path(path).read_text())
        values = np.array([math.nan if v is None else v for v in d.pop("value")], dtype=np.float64)
        counts = np.array(d.pop("count"), dtype=np.int64)
        d.pop("tau")
        return cls(d.pop("scale"), values, counts, d)


class ResponseAccumulator:
    """Streaming estimator; feed it one week at a time.

    Args:
        tau_max: Largest lag.
        scale: ``"trade"`` or ``"physical"``; only stored in the curve.
        include_zeros: Count zero-sign anchors in the denominator. On trade
            scale zero marks an undefined sign and this must stay False.
        log_returns: Use log returns instead of relative returns.
        pooling: ``"pooled"`` averages over all anchors of all weeks;
            ``"weekly"`` averages each week first, then the weekly curves.
    """

    def __init__(
        self,
        tau_max: int = DEFAULT_TAU_MAX,
        scale: str = TRADE,
        include_zeros: bool = False,
        log_returns: bool = False,
        pooling: str = "pooled",
    ):
        if tau_max < 1:
            raise ValueError("tau_max must be >= 1")
        if pooling not in ("pooled", "weekly"):
            raise ValueError(f"unknown pooling {pooling!r}")
        if include_zeros and scale == TRADE:
            raise ValueError("zero trade-scale signs are undefined and cannot be included")
        self.tau_max = tau_max
        self.scale = scale
        self.include_zeros = include_zeros
        self.log_returns = log_returns
        self.pooling = pooling
        self._sums = np.zeros(tau_max)
        self._comps = np.zeros(tau_max)
        self._nonzero = np.zeros(tau_max, dtype=np.int64)
        self._zero = np.zeros(tau_max, dtype=np.int64)
        self._weekly: list[np.ndarray] = []
        self.n_weeks = 0

    def add(self, midpoints: np.ndarray, signs: np.ndarray) -> None:
        mid = np.ascontiguousarray(midpoints, dtype=np.float64)
        eps = np.ascontiguousarray(signs, dtype=np.int8)
        if mid.shape != eps.shape:
            raise ValueError("midpoints and signs must align")
        self.n_weeks += 1
        if self.pooling == "weekly":
            sums, comps = np.zeros(self.tau_max), np.zeros(self.tau_max)
        else:
            sums, comps = self._sums, self._comps
        if self.log_returns:
            _kernels.accumulate_log(np.log(mid), eps, sums, comps)
        else:
            _kernels.accumulate_relative(mid, eps, sums, comps)
        nonzero, zero = _kernels.anchor_counts(eps, self.tau_max)
        self._nonzero += nonzero
        self._zero += zero
        if self.pooling == "weekly":
            n = nonzero + zero if self.include_zeros else nonzero
            with np.errstate(invalid="ignore", divide="ignore"):
                self._weekly.append(np.where(n > 0, (sums + comps) / n, np.nan))

    def counts(self, include_zeros: bool | None = None) -> np.ndarray:
        if include_zeros is None:
            include_zeros = self.include_zeros
        return self._nonzero + self._zero if include_zeros else self._nonzero.copy()

    def curve(self, include_zeros: bool | None = None, **meta) -> ResponseCurve:
        """Current estimate.

        ``include_zeros`` overrides the constructor setting, so one pass over
        the data yields both the zero-excluding and zero-including curves.
        Both share the same numerator.
        """
        if include_zeros is None:
            include_zeros = self.include_zeros
        if include_zeros and self.scale == TRADE:
            raise ValueError("zero trade-scale signs are undefined and cannot be included")
        if include_zeros != self.include_zeros and self.pooling == "weekly":
            raise ValueError("weekly pooling fixes zero handling at construction")
        counts = self.counts(include_zeros)
        if counts[0] == 0:
            raise NoData(f"no admissible anchors on {self.scale} scale")
        if self.pooling == "weekly":
            stack = np.vstack(self._weekly)
            have = ~np.isnan(stack)
            with np.errstate(invalid="ignore", divide="ignore"):
                values = np.where(have.any(axis=0), np.nansum(stack, axis=0) / have.sum(axis=0), np.nan)
        else:
            with np.errstate(invalid="ignore", divide="ignore"):
                values = np.where(counts > 0, (self._sums + self._comps) / counts, np.nan)
        meta = {
            "zero_handling": "include" if include_zeros else "exclude",
            "returns": "log" if self.log_returns else "relative",
            "pooling": self.pooling,
            "weeks": self.n_weeks,
            **meta,
        }
        return ResponseCurve(self.scale, values, counts, meta)


def _series(item) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(item, tuple):
        return item
    if item.signs is None:
        raise ValueError("series has no signs; classify it first")
    return item.midpoint, item.signs


def response_trade(weeks: Iterable, tau_max: int = DEFAULT_TAU_MAX, **options) -> ResponseCurve:
    """Trade-scale response pooled over ``weeks``.

    Each week is a ``TradeSeries`` with signs or a ``(midpoints, signs)``
    tuple. Undefined (zero) signs never contribute.
    """
    meta = options.pop("meta", {})
    acc = ResponseAccumulator(tau_max, TRADE, **options)
    for w in weeks:
        acc.add(*_series(w))
    return acc.curve(**meta)


def response_physical(
    weeks: Iterable, tau_max: int = DEFAULT_TAU_MAX, include_zeros: bool = False, **options
) -> ResponseCurve:
    """Physical-scale response pooled over ``weeks``; zero seconds are
    excluded unless ``include_zeros``."""
    meta = options.pop("meta", {})
    acc = ResponseAccumulator(tau_max, PHYSICAL, include_zeros=include_zeros, **options)
    for w in weeks:
        acc.add(*_series(w))
    return acc.curve(**meta)


@dataclass
class SpreadStat:
    symbol: str
    year: int | None
    avg_pip_spread: float
    n_obs: int


class SpreadAccumulator:
    """Mean pip spread over trade events, pooled across weeks."""

    def __init__(self, meta: PairMeta):
        self.meta = meta
        self._partials: list[float] = []
        self.n_obs = 0

    def add(self, bid: np.ndarray, ask: np.ndarray) -> None:
        if len(bid):
            spread = (np.asarray(ask) - np.asarray(bid)) * self.meta.scaling_factor
            self._partials.append(math.fsum(spread.tolist()))
            self.n_obs += len(spread)

    def stat(self, year: int | None = None) -> SpreadStat:
        if self.n_obs == 0:
            raise NoData(f"no trades for {self.meta.symbol}")
        return SpreadStat(self.meta.symbol, year, math.fsum(self._partials) / self.n_obs, self.n_obs)


def pip_spread_stat(events: Iterable, meta: PairMeta, year: int | None = None) -> SpreadStat:
    """Average ``(ask - bid) * scaling_factor`` over every trade event.

    ``events`` yields objects with ``bid``/``ask`` arrays (``TradeSeries``,
    ``WeekTicks``) or ``(bid, ask)`` tuples.
    """
    acc = SpreadAccumulator(meta)
    for e in events:
        bid, ask = e if isinstance(e, tuple) else (e.bid, e.ask)
        acc.add(bid, ask)
    return acc.stat(year)


def group_average(
    curves: Mapping[str, ResponseCurve],
    groups: Mapping[str, int],
    n_groups: int | None = None,
) -> dict[int, ResponseCurve]:
    """Unweighted mean of member curves per group and lag.

    Members with no data at a lag are left out of that lag's mean. The
    result's ``counts`` hold the number of contributing pairs per lag and
    ``meta["members"]`` the member symbols. Groups without any usable member
    are dropped with an :class:`EmptyGroup` warning.
    """
    present = [s for s in sorted(curves) if s in groups]
    if present:
        scale = curves[present[0]].scale
        tau_max = curves[present[0]].tau_max
        for s in present:
            if curves[s].scale != scale or curves[s].tau_max != tau_max:
                raise ValueError(f"curve of {s} does not share scale and lag grid")
    wanted = set(groups.values())
    if n_groups is not None:
        wanted |= set(range(1, n_groups + 1))
    out = {}
    for g in sorted(wanted):
        members = [s for s in present if groups[s] == g]
        if members:
            stack = np.vstack([curves[s].values for s in members])
            have = ~np.isnan(stack)
        if not members or not have.any():
            warnings.warn(f"group {g} has no member curves", EmptyGroup, stacklevel=2)
            continue
        n = have.sum(axis=0)
        with np.errstate(invalid="ignore", divide="ignore"):
            values = np.where(n > 0, np.nansum(stack, axis=0) / n, np.nan)
        out[g] = ResponseCurve(scale, values, n.astype(np.int64), {"group": g, "members": members})
    return out
