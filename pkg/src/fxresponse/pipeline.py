"""Single-pass analysis of one pair-year: ticks in, curves and spread out."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from datetime import tzinfo
from pathlib import Path
from typing import Iterable, Sequence

from .ingest import EST, IngestStats, WeekTicks, iter_weeks
from .pairmeta import PairMeta
from .response import (
    DEFAULT_TAU_MAX,
    PHYSICAL,
    TRADE,
    NoData,
    ResponseAccumulator,
    ResponseCurve,
    SpreadAccumulator,
    SpreadStat,
)
from .signs import SignDiagnostics, classify_physical_scale, classify_trade_scale
from .timescales import PhysicalSeries, TradeSeries, to_physical_scale, to_trade_scale

logger = logging.getLogger(__name__)

SCALES = (TRADE, PHYSICAL)


def classify_week(ticks: WeekTicks, physical: bool = True,
                  diagnostics: SignDiagnostics | None = None) -> tuple[TradeSeries, PhysicalSeries | None]:
    """Build both time scales of one week and attach their signs."""
    trade = to_trade_scale(ticks)
    trade.signs = classify_trade_scale(trade.midpoint)
    if not physical:
        if diagnostics is not None:
            diagnostics.undefined_trade_signs += int((trade.signs == 0).sum())
        return trade, None
    phys = to_physical_scale(trade, ticks.week)
    phys.signs = classify_physical_scale(trade.signs, phys.n_trades, diagnostics)
    return trade, phys


@dataclass
class PairYearResult:
    symbol: str
    year: int | None
    curves: dict[str, ResponseCurve] = field(default_factory=dict)
    spread: SpreadStat | None = None
    ingest: IngestStats = field(default_factory=IngestStats)
    signs: SignDiagnostics = field(default_factory=SignDiagnostics)
    errors: list[str] = field(default_factory=list)


def analyze_weeks(
    weeks: Iterable[WeekTicks],
    meta: PairMeta,
    year: int | None = None,
    scales: Sequence[str] = SCALES,
    tau_max: int = DEFAULT_TAU_MAX,
    include_zeros: bool = False,
    log_returns: bool = False,
    pooling: str = "pooled",
    ingest: IngestStats | None = None,
) -> PairYearResult:
    """Run every estimator over a stream of weeks in one pass.

    Curves are keyed by scale. A scale without data is reported in
    ``errors`` rather than raised, so a batch keeps going.
    """
    result = PairYearResult(meta.symbol, year, ingest=ingest if ingest is not None else IngestStats())
    accs = {
        s: ResponseAccumulator(tau_max, s, include_zeros=include_zeros and s == PHYSICAL,
                               log_returns=log_returns, pooling=pooling)
        for s in scales
    }
    spread = SpreadAccumulator(meta)
    for week in weeks:
        trade, phys = classify_week(week, PHYSICAL in accs, result.signs)
        spread.add(trade.bid, trade.ask)
        if TRADE in accs:
            accs[TRADE].add(trade.midpoint, trade.signs)
        if phys is not None:
            accs[PHYSICAL].add(phys.midpoint, phys.signs)
    label = {"pair": meta.symbol, "year": year}
    for s, acc in accs.items():
        try:
            result.curves[s] = acc.curve(**label)
        except NoData as exc:
            result.errors.append(f"{s}: {exc}")
    try:
        result.spread = spread.stat(year)
    except NoData as exc:
        result.errors.append(f"spread: {exc}")
    return result


def analyze_files(paths: Sequence[str | Path], meta: PairMeta, year: int | None = None,
                  stamp_tz: tzinfo = EST, **options) -> PairYearResult:
    stats = IngestStats()
    return analyze_weeks(iter_weeks(paths, stats, stamp_tz), meta, year, ingest=stats, **options)
