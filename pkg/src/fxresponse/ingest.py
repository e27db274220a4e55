"""Streaming reader for tick-by-tick best bid/ask quote files.

Records look like ``20190102 070005123,1.10200,1.10210``: a wall-clock stamp
with millisecond precision followed by best bid and best ask. Some provider
dumps carry a trailing volume column (always zero); it is accepted and
ignored.

File stamps are interpreted in a fixed UTC-5 zone by default, while the
market window (Sunday 19:10 to Friday 16:50) is evaluated in New York local
time, DST included.
"""

from __future__ import annotations

import gzip
import io
import json
import logging
import math
import warnings
import zipfile
from array import array
from dataclasses import asdict, dataclass, field
from datetime import date, datetime, time, timedelta, timezone, tzinfo
from pathlib import Path
from typing import Iterable, Iterator, Sequence
from zoneinfo import ZoneInfo

import numpy as np

logger = logging.getLogger(__name__)

NEW_YORK = ZoneInfo("America/New_York")
EST = timezone(timedelta(hours=-5), "EST")

WINDOW_OPEN = time(19, 10)
WINDOW_CLOSE = time(16, 50)


class TickError(ValueError):
    """Base class for lines rejected at the parse boundary."""


class MalformedLine(TickError):
    pass


class CrossedQuote(TickError):
    pass


class EmptyFileWarning(UserWarning):
    pass


@dataclass(frozen=True, slots=True)
class QuoteTick:
    ts_ms: int
    bid: float
    ask: float

    @property
    def midpoint(self) -> float:
        return (self.bid + self.ask) / 2


@dataclass(frozen=True)
class MarketWeek:
    """Trading window of one week, as epoch milliseconds ``[start_ms, end_ms)``."""

    week_id: str
    start_ms: int
    end_ms: int

    def __post_init__(self) -> None:
        if self.end_ms <= self.start_ms:
            raise ValueError(f"empty window {self.start_ms}..{self.end_ms}")

    @classmethod
    def for_sunday(cls, sunday: date, zone: tzinfo = NEW_YORK) -> "MarketWeek":
        if sunday.weekday() != 6:
            raise ValueError(f"{sunday} is not a Sunday")
        friday = sunday + timedelta(days=5)
        start = datetime.combine(sunday, WINDOW_OPEN, tzinfo=zone)
        end = datetime.combine(friday, WINDOW_CLOSE, tzinfo=zone)
        iso = (sunday + timedelta(days=1)).isocalendar()
        return cls(
            week_id=f"{iso[0]}-W{iso[1]:02d}",
            start_ms=round(start.timestamp() * 1000),
            end_ms=round(end.timestamp() * 1000),
        )

    @classmethod
    def containing_date(cls, day: date) -> "MarketWeek":
        """Window of the trading week whose Sunday is on or before ``day``."""
        return cls.for_sunday(day - timedelta(days=(day.weekday() + 1) % 7))

    @classmethod
    def upcoming(cls, ts_ms: int) -> "MarketWeek":
        """First window whose end lies after ``ts_ms``.

        ``ts_ms`` is inside the returned window unless it falls in a weekend
        gap, in which case the window opens later.
        """
        day = datetime.fromtimestamp(ts_ms / 1000, NEW_YORK).date()
        sunday = day - timedelta(days=(day.weekday() + 1) % 7)
        week = cls.for_sunday(sunday)
        if ts_ms >= week.end_ms:
            week = cls.for_sunday(sunday + timedelta(days=7))
        return week

    @property
    def n_seconds(self) -> int:
        return (self.end_ms - self.start_ms) // 1000

    def __contains__(self, ts_ms: int) -> bool:
        return self.start_ms <= ts_ms < self.end_ms


@dataclass
class WeekTicks:
    """Columnar batch of the admitted ticks of one market week."""

    week: MarketWeek
    ts_ms: np.ndarray
    bid: np.ndarray
    ask: np.ndarray

    def __len__(self) -> int:
        return len(self.ts_ms)

    def ticks(self) -> Iterator[QuoteTick]:
        for t, b, a in zip(self.ts_ms.tolist(), self.bid.tolist(), self.ask.tolist()):
            yield QuoteTick(t, b, a)


@dataclass
class IngestStats:
    lines_total: int = 0
    lines_bad: int = 0
    crossed: int = 0
    ticks: int = 0
    out_of_window: int = 0
    weeks_seen: int = 0
    files: list[str] = field(default_factory=list)
    empty_files: list[str] = field(default_factory=list)

    def merge(self, other: "IngestStats") -> None:
        self.lines_total += other.lines_total
        self.lines_bad += other.lines_bad
        self.crossed += other.crossed
        self.ticks += other.ticks
        self.out_of_window += other.out_of_window
        self.weeks_seen += other.weeks_seen
        self.files += other.files
        self.empty_files += other.empty_files

    def to_json(self, **kw) -> str:
        return json.dumps(asdict(self), **kw)


class _StampParser:
    """Turns ``YYYYMMDD HHMMSSNNN`` into epoch milliseconds."""

    def __init__(self, stamp_tz: tzinfo = EST):
        self.tz = stamp_tz
        self._fixed = isinstance(stamp_tz, timezone)
        self._days: dict[str, int] = {}

    def _day_ms(self, ymd: str) -> int:
        ms = self._days.get(ymd)
        if ms is None:
            if not ymd.isdigit():
                raise MalformedLine(f"bad date {ymd!r}")
            try:
                d = datetime(int(ymd[:4]), int(ymd[4:6]), int(ymd[6:]), tzinfo=self.tz)
            except ValueError as exc:
                raise MalformedLine(f"bad date {ymd!r}: {exc}") from None
            ms = round(d.timestamp() * 1000)
            if len(self._days) > 10_000:
                self._days.clear()
            self._days[ymd] = ms
        return ms

    def __call__(self, stamp: str) -> int:
        if len(stamp) != 18 or stamp[8] != " ":
            raise MalformedLine(f"bad timestamp {stamp!r}")
        hms = stamp[9:]
        if not hms.isdigit():
            raise MalformedLine(f"bad time {hms!r}")
        hh, mm, ss, ms = int(hms[:2]), int(hms[2:4]), int(hms[4:6]), int(hms[6:])
        if hh > 23 or mm > 59 or ss > 59:
            raise MalformedLine(f"bad time {hms!r}")
        day_ms = self._day_ms(stamp[:8])
        if self._fixed:
            return day_ms + ((hh * 60 + mm) * 60 + ss) * 1000 + ms
        ymd = stamp[:8]
        wall = datetime(int(ymd[:4]), int(ymd[4:6]), int(ymd[6:]), hh, mm, ss, tzinfo=self.tz)
        return round(wall.timestamp() * 1000) + ms


def _parse(line: str, stamp: _StampParser) -> QuoteTick:
    parts = line.rstrip("\r\n").split(",")
    if len(parts) not in (3, 4):
        raise MalformedLine(f"expected 3 fields, got {len(parts)}: {line!r}")
    ts = stamp(parts[0])
    try:
        bid = float(parts[1])
        ask = float(parts[2])
    except ValueError:
        raise MalformedLine(f"non-numeric price in {line!r}") from None
    if not (math.isfinite(bid) and math.isfinite(ask)) or bid <= 0 or ask <= 0:
        raise MalformedLine(f"prices must be positive and finite: {line!r}")
    if bid >= ask:
        raise CrossedQuote(f"bid {bid} >= ask {ask}")
    return QuoteTick(ts, bid, ask)


def parse_line(line: str, stamp_tz: tzinfo = EST) -> QuoteTick:
    """Parse one ``YYYYMMDD HHMMSSNNN,bid,ask`` record.

    Raises:
        MalformedLine: wrong field count, bad stamp, non-numeric or
            non-positive price.
        CrossedQuote: ``bid >= ask``.
    """
    return _parse(line, _StampParser(stamp_tz))


def market_week_filter(ticks: Iterable[QuoteTick], week: MarketWeek) -> Iterator[QuoteTick]:
    for tick in ticks:
        if week.start_ms <= tick.ts_ms < week.end_ms:
            yield tick


def open_text(path: str | Path) -> io.TextIOBase:
    """Open a tick file as text; ``.gz`` and single-member ``.zip`` are unpacked."""
    path = Path(path)
    with open(path, "rb") as fh:
        magic = fh.read(4)
    if magic[:2] == b"\x1f\x8b":
        return io.TextIOWrapper(gzip.open(path, "rb"), encoding="ascii", newline="")
    if magic == b"PK\x03\x04":
        zf = zipfile.ZipFile(path)
        members = [n for n in zf.namelist() if n.lower().endswith((".csv", ".txt"))]
        if len(members) != 1:
            raise OSError(f"{path}: expected one tick file inside the archive, found {members}")
        return io.TextIOWrapper(zf.open(members[0]), encoding="ascii", newline="")
    return open(path, "r", encoding="ascii", newline="")


class _WeekBuffer:
    __slots__ = ("week", "ts", "bid", "ask")

    def __init__(self, week: MarketWeek):
        self.week = week
        self.ts = array("q")
        self.bid = array("d")
        self.ask = array("d")

    def freeze(self) -> WeekTicks:
        return WeekTicks(
            self.week,
            np.frombuffer(self.ts, dtype=np.int64),
            np.frombuffer(self.bid, dtype=np.float64),
            np.frombuffer(self.ask, dtype=np.float64),
        )


def iter_weeks(
    paths: str | Path | Sequence[str | Path],
    stats: IngestStats | None = None,
    stamp_tz: tzinfo = EST,
) -> Iterator[WeekTicks]:
    """Stream the admitted ticks of one or more files, one week at a time.

    Files are read in the given order as a single chronological stream, so a
    week split across two monthly files comes out as one batch. Only the
    current week is held in memory.

    Bad lines, crossed quotes and out-of-order stamps are counted in
    ``stats`` and skipped. A stamp earlier than the previous admitted one is
    counted as a bad line; equal stamps are kept in file order.
    """
    if isinstance(paths, (str, Path)):
        paths = [paths]
    if stats is None:
        stats = IngestStats()
    stamp = _StampParser(stamp_tz)
    buf: _WeekBuffer | None = None
    week: MarketWeek | None = None
    start = end = 0
    last_ts = -(2**62)

    for path in paths:
        stats.files.append(str(path))
        n_before = stats.lines_total
        with open_text(path) as fh:
            for line in fh:
                stats.lines_total += 1
                try:
                    tick = _parse(line, stamp)
                except CrossedQuote:
                    stats.crossed += 1
                    continue
                except MalformedLine:
                    stats.lines_bad += 1
                    continue
                ts = tick.ts_ms
                if ts < last_ts:
                    stats.lines_bad += 1
                    continue
                last_ts = ts
                stats.ticks += 1
                if ts >= end:
                    if buf is not None and len(buf.ts):
                        stats.weeks_seen += 1
                        yield buf.freeze()
                    week = MarketWeek.upcoming(ts)
                    start, end = week.start_ms, week.end_ms
                    buf = _WeekBuffer(week)
                if ts < start:
                    stats.out_of_window += 1
                    continue
                buf.ts.append(ts)
                buf.bid.append(tick.bid)
                buf.ask.append(tick.ask)
        if stats.lines_total == n_before:
            stats.empty_files.append(str(path))
            warnings.warn(f"{path}: empty tick file", EmptyFileWarning, stacklevel=2)
    if buf is not None and len(buf.ts):
        stats.weeks_seen += 1
        yield buf.freeze()


def scan_file(path: str | Path, pair=None, stamp_tz: tzinfo = EST) -> tuple[list[WeekTicks], IngestStats]:
    """Read a whole file into per-week batches.

    Convenience wrapper over :func:`iter_weeks` for files that fit in memory;
    ``pair`` is only used for log messages.
    """
    stats = IngestStats()
    weeks = list(iter_weeks(path, stats, stamp_tz))
    label = getattr(pair, "symbol", pair) or Path(path).name
    logger.info(
        "%s: %d lines, %d ticks, %d bad, %d crossed, %d weeks",
        label, stats.lines_total, stats.ticks, stats.lines_bad, stats.crossed, stats.weeks_seen,
    )
    return weeks, stats


def format_stamp(ts_ms: int, stamp_tz: tzinfo = EST) -> str:
    """Inverse of the stamp parser: epoch ms to ``YYYYMMDD HHMMSSNNN``."""
    dt = datetime.fromtimestamp(ts_ms // 1000, stamp_tz)
    return f"{dt:%Y%m%d %H%M%S}{ts_ms % 1000:03d}"
