from datetime import date, timedelta

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import count_window_seconds

from fxresponse.ingest import MarketWeek, WeekTicks
from fxresponse.timescales import (
    TradeSeries,
    midpoints,
    slot_index,
    to_physical_scale,
    to_trade_scale,
    write_series_csv,
)


def ticks(week, offsets_ms, bid, ask):
    ts = week.start_ms + np.asarray(offsets_ms, dtype=np.int64)
    return WeekTicks(week, ts, np.asarray(bid, float), np.asarray(ask, float))


def trade_series(week, offsets_ms, mids):
    ts = week.start_ms + np.asarray(offsets_ms, dtype=np.int64)
    m = np.asarray(mids, float)
    return TradeSeries(week, ts, m - 1e-5, m + 1e-5, m)


def test_duplicate_quote_collapsed(week):
    tr = to_trade_scale(ticks(week, [0, 1, 2], [1.10, 1.10, 1.11], [1.1002, 1.1002, 1.1102]))
    assert len(tr) == 2
    assert tr.ts_ms.tolist() == [week.start_ms, week.start_ms + 2]


def test_spread_only_change_is_an_event(week):
    tr = to_trade_scale(ticks(week, [0, 1], [1.1000, 1.0999], [1.1002, 1.1003]))
    assert len(tr) == 2 and tr.midpoint[0] == tr.midpoint[1]


def test_midpoint_value():
    assert midpoints(np.array([1.1020]), np.array([1.1022]))[0] == pytest.approx(1.1021, abs=1e-15)


def test_single_tick(week):
    assert len(to_trade_scale(ticks(week, [5], [1.1], [1.2]))) == 1


def test_empty_week(week):
    tr = to_trade_scale(ticks(week, [], [], []))
    assert len(tr) == 0
    assert len(to_physical_scale(tr)) == 0


def test_forward_fill_within_two_seconds(week):
    tr = trade_series(week, [100, 200, 300], [1.0, 1.1, 1.2])
    ph = to_physical_scale(tr)
    assert ph.n_trades[:2].tolist() == [3, 0]
    assert ph.midpoint[1] == ph.midpoint[0] == 1.2


def test_empty_first_hour_carries_seed_midpoint(week):
    tr = trade_series(week, [3_600_000, 3_600_500, 3_601_000], [1.3, 1.4, 1.5])
    ph = to_physical_scale(tr)
    assert np.all(ph.midpoint[:3600] == 1.3)
    assert np.all(ph.n_trades[:3600] == 0)
    assert ph.midpoint[3600] == 1.4 and ph.midpoint[3601] == 1.5


def test_normal_week_slot_count(week):
    assert week.n_seconds == count_window_seconds(date(2019, 1, 6)) == 423_600


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 520))
def test_slot_count_matches_brute_force_counter(k):
    sunday = date(2015, 1, 4) + timedelta(days=7 * k)
    week = MarketWeek.for_sunday(sunday)
    tr = trade_series(week, [0], [1.0])
    assert len(to_physical_scale(tr)) == count_window_seconds(sunday)


@given(st.lists(st.integers(0, 423_599_999), min_size=1, max_size=200))
def test_trade_counts_sum_to_events(offsets):
    week = MarketWeek.for_sunday(date(2019, 1, 6))
    offsets = sorted(offsets)
    tr = trade_series(week, offsets, np.linspace(1.0, 2.0, len(offsets)))
    ph = to_physical_scale(tr)
    assert ph.n_trades.sum() == len(tr)
    assert len(ph) == week.n_seconds


def test_second_aligned_series_resamples_to_itself(rng):
    week = MarketWeek("toy", 1_000_000, 1_000_000 + 500_000)
    mids = 1.0 + rng.random(500)
    tr = trade_series(week, np.arange(500) * 1000, mids)
    ph = to_physical_scale(tr)
    np.testing.assert_array_equal(ph.midpoint, mids)
    assert np.all(ph.n_trades == 1)


def test_piecewise_constant_between_arrivals(week, rng):
    offsets = np.sort(rng.choice(200_000, 50, replace=False)) * 7
    tr = trade_series(week, offsets, 1.0 + rng.random(50))
    ph = to_physical_scale(tr)
    changes = np.flatnonzero(np.diff(ph.midpoint)) + 1
    assert np.all(ph.n_trades[changes] > 0)


def test_events_outside_window_rejected(week):
    with pytest.raises(ValueError):
        slot_index(np.array([week.end_ms]), week)


def test_series_csv_dump(tmp_path, week):
    tr = trade_series(week, [0, 1500], [1.0, 1.5])
    f = tmp_path / "phys.csv"
    write_series_csv(to_physical_scale(tr), f)
    lines = f.read_text().splitlines()
    assert lines[0] == "index,timestamp,midpoint,n_trades"
    assert lines[1] == f"0,{week.start_ms},1.0,1"
    assert lines[2] == f"1,{week.start_ms + 1000},1.5,1"
    assert len(lines) == week.n_seconds + 1
