"""Trade-time and physical-time views of one market week.

Trade time advances by one whenever the quoted (bid, ask) pair changes.
Physical time advances by one per second of the market window; each slot
carries the last midpoint seen before the slot ends and the number of quote
changes that happened inside it.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

from .ingest import MarketWeek, WeekTicks


@dataclass(frozen=True)
class TradeEvent:
    n: int
    ts_ms: int
    midpoint: float
    sign: int = 0


@dataclass
class TradeSeries:
    """Columnar trade-time series of one week; index ``n`` is the position."""

    week: MarketWeek
    ts_ms: np.ndarray
    bid: np.ndarray
    ask: np.ndarray
    midpoint: np.ndarray
    signs: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.ts_ms)

    def __iter__(self) -> Iterator[TradeEvent]:
        signs = self.signs.tolist() if self.signs is not None else [0] * len(self)
        for n, (t, m, s) in enumerate(zip(self.ts_ms.tolist(), self.midpoint.tolist(), signs)):
            yield TradeEvent(n, t, m, s)


@dataclass
class PhysicalSeries:
    """One slot per second of the week window."""

    week: MarketWeek
    midpoint: np.ndarray
    n_trades: np.ndarray
    signs: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.midpoint)

    @property
    def slot_start_ms(self) -> np.ndarray:
        return self.week.start_ms + 1000 * np.arange(len(self), dtype=np.int64)


def midpoints(bid: np.ndarray, ask: np.ndarray) -> np.ndarray:
    return (np.asarray(bid, dtype=np.float64) + np.asarray(ask, dtype=np.float64)) / 2


def to_trade_scale(ticks: WeekTicks) -> TradeSeries:
    """Keep the ticks whose (bid, ask) differs from the previous tick's.

    The first tick always opens the series.
    """
    bid, ask = ticks.bid, ticks.ask
    if len(bid) == 0:
        keep = np.zeros(0, dtype=bool)
    else:
        keep = np.empty(len(bid), dtype=bool)
        keep[0] = True
        keep[1:] = (bid[1:] != bid[:-1]) | (ask[1:] != ask[:-1])
    b, a = bid[keep], ask[keep]
    return TradeSeries(ticks.week, ticks.ts_ms[keep], b, a, midpoints(b, a))


def slot_index(ts_ms: np.ndarray, week: MarketWeek) -> np.ndarray:
    ts = np.asarray(ts_ms, dtype=np.int64)
    if len(ts) and (ts[0] < week.start_ms or ts[-1] >= week.end_ms):
        raise ValueError(f"events fall outside week {week.week_id}")
    return (ts - week.start_ms) // 1000


def to_physical_scale(events: TradeSeries, week: MarketWeek | None = None) -> PhysicalSeries:
    """Previous-tick sampling of a trade series onto the one-second grid.

    Slots before the first event carry the first event's midpoint. An empty
    trade series gives an empty physical series.
    """
    week = week or events.week
    if len(events) == 0:
        return PhysicalSeries(week, np.zeros(0), np.zeros(0, dtype=np.int64))
    n_slots = week.n_seconds
    n_trades = np.bincount(slot_index(events.ts_ms, week), minlength=n_slots).astype(np.int64)
    last = np.cumsum(n_trades) - 1
    np.maximum(last, 0, out=last)
    return PhysicalSeries(week, events.midpoint[last], n_trades)


def write_series_csv(series: TradeSeries | PhysicalSeries, path: str | Path) -> None:
    """Dump ``index,timestamp,midpoint,n_trades`` rows for inspection."""
    if isinstance(series, PhysicalSeries):
        ts, counts = series.slot_start_ms, series.n_trades
    else:
        ts, counts = series.ts_ms, np.ones(len(series), dtype=np.int64)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "timestamp", "midpoint", "n_trades"])
        for i, (t, m, c) in enumerate(zip(ts.tolist(), series.midpoint.tolist(), counts.tolist())):
            w.writerow([i, t, repr(m), c])
