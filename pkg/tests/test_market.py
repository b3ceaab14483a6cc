from datetime import date

import pytest
from hypothesis import given
from hypothesis import strategies as st

from rulehop.errors import InsufficientHistory, InvariantViolation, MissingDate, ParseError
from rulehop.market import (
    DOWN,
    UP,
    PriceSeries,
    forward_return,
    label,
    label_table,
    load_prices_csv,
    write_prices_csv,
)

D = date


def _series(closes, ticker="T0", start=D(2022, 1, 3)):
    days = tuple(D.fromordinal(start.toordinal() + i) for i in range(len(closes)))
    return PriceSeries(ticker, days, tuple(closes))


def test_series_invariants():
    with pytest.raises(InvariantViolation):
        PriceSeries("T", (D(2022, 1, 2), D(2022, 1, 1)), (1.0, 2.0))
    with pytest.raises(InvariantViolation):
        PriceSeries("T", (D(2022, 1, 1),), (0.0,))


def test_forward_return_examples():
    s = _series([100.0, 102.0, 102.0])
    assert forward_return(s, s.dates[0]) == pytest.approx(0.02)
    assert forward_return(s, s.dates[1]) == 0.0
    with pytest.raises(InsufficientHistory):
        forward_return(s, s.dates[-1])
    with pytest.raises(MissingDate):
        forward_return(s, D(2021, 1, 1))


def test_label_examples():
    s = _series([100.0, 102.0, 102.0, 101.49])
    assert label(s, s.dates[0]).direction == UP
    assert label(s, s.dates[1]).direction == DOWN  # zero return is DOWN
    assert label(s, s.dates[2]).direction == DOWN


def test_label_direction_invariant():
    from rulehop.market import Label

    with pytest.raises(InvariantViolation):
        Label("T", D(2022, 1, 1), 1, 0.01, DOWN)


def test_trading_gaps_use_series_calendar():
    days = (D(2022, 1, 3), D(2022, 1, 4), D(2022, 1, 7))  # gap = non-trading days
    s = PriceSeries("T", days, (100.0, 101.0, 99.0))
    assert forward_return(s, D(2022, 1, 4)) == pytest.approx((99.0 - 101.0) / 101.0)


def test_label_table_counts_and_order():
    a = _series([100.0, 101.0, 99.0], ticker="A")
    b = _series([50.0, 51.0], ticker="B")
    table = label_table([b, a], D(2022, 1, 1), D(2022, 2, 1))
    assert [(l.ticker, l.date) for l in table] == sorted((l.ticker, l.date) for l in table)
    assert len(table) == 3  # A contributes 2, B contributes 1
    assert table.skipped == 2  # each final date lacks a successor
    empty = label_table([a], D(2021, 1, 1), D(2021, 2, 1))
    assert len(empty) == 0


def test_label_table_matches_bruteforce(rng):
    closes = [100.0]
    for _ in range(20):
        closes.append(closes[-1] * (1 + rng.uniform(-0.05, 0.05)))
    s = _series(closes)
    table = label_table([s], s.dates[3], s.dates[15])
    for lab in table:
        i = s.dates.index(lab.date)
        expected = (s.closes[i + 1] - s.closes[i]) / s.closes[i]
        assert lab.forward_return == expected
        assert lab.direction == (UP if expected > 0 else DOWN)


@given(scale=st.floats(min_value=1e-6, max_value=1e6, allow_nan=False))
def test_scale_invariance(scale):
    s = _series([100.0, 103.0, 97.0, 97.0])
    scaled = PriceSeries("T0", s.dates, tuple(c * scale for c in s.closes))
    for day in s.dates[:-1]:
        base = forward_return(s, day)
        other = forward_return(scaled, day)
        assert other == pytest.approx(base, rel=1e-12, abs=1e-15)
        assert label(s, day).direction == label(scaled, day).direction


def test_prices_csv_round_trip(tmp_path):
    path = tmp_path / "prices.csv"
    a = _series([100.0, 40.0, 41.0], ticker="A")  # -60% move gets flagged
    write_prices_csv(str(path), [a], "hdr")
    series, flagged = load_prices_csv(str(path))
    assert series["A"].closes == a.closes
    assert len(flagged) == 1 and flagged[0]["ticker"] == "A"


def test_prices_csv_errors(tmp_path):
    bad_header = tmp_path / "bad.csv"
    bad_header.write_text("nope,nope\n")
    with pytest.raises(ParseError):
        load_prices_csv(str(bad_header))
    bad_row = tmp_path / "row.csv"
    bad_row.write_text("ticker,date,adj_close\nA,2022-01-01,abc\n")
    with pytest.raises(ParseError) as err:
        load_prices_csv(str(bad_row))
    assert err.value.line_no == 2
