"""Synthetic quote streams with known trade signs, and brute-force oracles.

The flow model is a test fixture, not a market model. Signs follow a two
state Markov chain that repeats the previous sign with probability
``sign_autocorr``. Each trade pushes the midpoint ``impact_g`` pips in its
direction; a ``permanent_fraction`` of that push stays forever, the rest
relaxes geometrically with an e-folding time of ``impact_decay`` trades.
Observation noise, uniform in ``[-noise_pips, noise_pips]``, is added on top
of the midpoint path without accumulating.

With ``permanent_fraction > 0`` and no noise, every trade moves the midpoint
strictly in its own direction, so the trade-scale classifier recovers every
sign.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable

import numpy as np
from scipy.signal import lfilter

from .ingest import EST, MarketWeek, WeekTicks, format_stamp
from .response import TRADE, NoData, ResponseCurve

BRUTE_FORCE_CAP = 10_000


class InvalidModel(ValueError):
    pass


class TooLarge(ValueError):
    pass


@dataclass(frozen=True)
class FlowModel:
    seed: int = 0
    n_events: int = 10_000
    sign_autocorr: float = 0.8
    impact_g: float = 1.0
    noise_pips: float = 0.0
    base_price: float = 1.1
    spread_pips: float = 1.0
    scaling_factor: int = 10_000
    permanent_fraction: float = 0.45
    impact_decay: float = 100.0
    price_decimals: int | None = None

    def validate(self) -> None:
        checks = [
            (self.n_events >= 0, "n_events must be >= 0"),
            (0 <= self.sign_autocorr < 1, "sign_autocorr must be in [0, 1)"),
            (self.impact_g >= 0, "impact_g must be >= 0"),
            (self.noise_pips >= 0, "noise_pips must be >= 0"),
            (self.base_price > 0, "base_price must be positive"),
            (self.spread_pips > 0, "spread_pips must be positive"),
            (self.scaling_factor > 0, "scaling_factor must be positive"),
            (0 <= self.permanent_fraction <= 1, "permanent_fraction must be in [0, 1]"),
            (self.impact_decay > 0, "impact_decay must be positive"),
        ]
        for ok, msg in checks:
            if not ok:
                raise InvalidModel(msg)
        if self.spread_quanta < 1:
            raise InvalidModel("spread rounds to zero at the chosen price precision")

    @property
    def pip(self) -> float:
        return 1 / self.scaling_factor

    @property
    def decimals(self) -> int:
        if self.price_decimals is not None:
            return self.price_decimals
        return round(math.log10(self.scaling_factor)) + 3

    @property
    def spread_quanta(self) -> int:
        return round(self.spread_pips * 10 ** (self.decimals - round(math.log10(self.scaling_factor))))


@dataclass
class SyntheticWeek:
    ticks: WeekTicks
    true_signs: np.ndarray
    model: FlowModel


def true_signs(model: FlowModel, rng: np.random.Generator) -> np.ndarray:
    n = model.n_events
    if n == 0:
        return np.zeros(0, dtype=np.int8)
    first = 1 if rng.random() < 0.5 else -1
    flips = rng.random(n - 1) >= model.sign_autocorr
    parity = np.concatenate(([0], np.cumsum(flips) % 2))
    return (first * (1 - 2 * parity)).astype(np.int8)


def _timestamps(n: int, week: MarketWeek, rng: np.random.Generator) -> np.ndarray:
    span = week.end_ms - week.start_ms
    if n > span:
        raise InvalidModel(f"{n} events do not fit into {span} distinct milliseconds")
    return week.start_ms + np.sort(rng.choice(span, size=n, replace=False)).astype(np.int64)


def generate(model: FlowModel, week: MarketWeek) -> SyntheticWeek:
    """Generate one week of quotes and the signs that produced them.

    Timestamps are distinct, increasing and uniform over the week window.
    Prices sit on a grid of ``model.decimals`` decimal places so the stream
    survives a round trip through the text format unchanged.
    """
    model.validate()
    rng = np.random.default_rng(model.seed)
    eps = true_signs(model, rng)
    n = len(eps)
    ts = _timestamps(n, week, rng)

    g = model.impact_g * eps.astype(np.float64)
    p = model.permanent_fraction
    decay = math.exp(-1 / model.impact_decay)
    transient = lfilter([1.0], [1.0, -decay], (1 - p) * g) if n else np.zeros(0)
    path_pips = p * np.cumsum(g) + transient
    if model.noise_pips > 0:
        path_pips = path_pips + rng.uniform(-model.noise_pips, model.noise_pips, n)

    scale = 10**model.decimals
    pip_quanta = scale / model.scaling_factor
    mid_quanta = model.base_price * scale + path_pips * pip_quanta
    half = model.spread_quanta / 2
    bid_q = np.rint(mid_quanta - half)
    ask_q = bid_q + model.spread_quanta
    if n and bid_q.min() <= 0:
        raise InvalidModel("midpoint path reaches non-positive prices")
    ticks = WeekTicks(week, ts, bid_q / scale, ask_q / scale)
    return SyntheticWeek(ticks, eps, model)


def generate_weeks(model: FlowModel, weeks: Iterable[MarketWeek]) -> list[SyntheticWeek]:
    """One independent stream per week; week ``i`` uses seed ``model.seed + i``."""
    return [generate(replace(model, seed=model.seed + i), w) for i, w in enumerate(weeks)]


def write_ascii(streams: Iterable[WeekTicks | SyntheticWeek], path: str | Path, decimals: int = 5,
                stamp_tz=EST) -> int:
    """Write ticks in the provider text format; returns the line count."""
    n = 0
    with open(path, "w", newline="") as fh:
        for s in streams:
            if isinstance(s, SyntheticWeek):
                decimals = s.model.decimals
                s = s.ticks
            fmt = f"{{}},{{:.{decimals}f}},{{:.{decimals}f}}\n"
            lines = [
                fmt.format(format_stamp(t, stamp_tz), b, a)
                for t, b, a in zip(s.ts_ms.tolist(), s.bid.tolist(), s.ask.tolist())
            ]
            fh.writelines(lines)
            n += len(lines)
    return n


def expected_permanent_response(model: FlowModel, tau_max: int) -> np.ndarray:
    """Closed-form mean response of a fully permanent, noise-free flow.

    With every trade moving the midpoint by ``g`` pips and sign correlation
    ``c**k`` at lag ``k`` (``c = 2*rho - 1``), the mean response is
    ``(g_price / m) * sum_{k < tau} c**k``, to first order in ``g/m``.
    """
    c = 2 * model.sign_autocorr - 1
    g_price = model.impact_g * model.pip
    return g_price / model.base_price * np.cumsum(c ** np.arange(tau_max))


def brute_force_response(weeks: Iterable, tau_max: int, include_zeros: bool = False,
                         scale: str = TRADE) -> ResponseCurve:
    """Literal double loop over anchors and lags; reference for tests.

    ``weeks`` holds ``(midpoints, signs)`` pairs. Anchors with a zero sign
    are dropped unless ``include_zeros``; all weeks are pooled.
    """
    weeks = [(list(map(float, m)), list(map(int, s))) for m, s in weeks]
    for m, _ in weeks:
        if len(m) > BRUTE_FORCE_CAP:
            raise TooLarge(f"series of length {len(m)} exceeds {BRUTE_FORCE_CAP}")
    values = np.full(tau_max, np.nan)
    counts = np.zeros(tau_max, dtype=np.int64)
    for tau in range(1, tau_max + 1):
        terms = []
        for m, s in weeks:
            for t in range(1, len(m)):
                if t - 1 + tau > len(m) - 1:
                    break
                if s[t] == 0 and not include_zeros:
                    continue
                r = (m[t - 1 + tau] - m[t - 1]) / m[t - 1]
                terms.append(r * s[t])
        counts[tau - 1] = len(terms)
        if terms:
            values[tau - 1] = math.fsum(terms) / len(terms)
    if counts[0] == 0:
        raise NoData("no admissible anchors")
    return ResponseCurve(scale, values, counts,
                         {"zero_handling": "include" if include_zeros else "exclude"})
