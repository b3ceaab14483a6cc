"""Adjusted price series, forward returns, and UP/DOWN ground-truth labels.

The trading calendar is implicit in each series: dates present are trading
days, gaps are not. A forward return over horizon ``h`` compares the h-th
next trading date in the same series. Zero return labels DOWN.

Missing data is skipped and counted, never imputed — imputation would
silently alter labels.
"""

from __future__ import annotations

import csv
from bisect import bisect_left
from dataclasses import dataclass, field
from datetime import date
from typing import Iterable, Iterator, Optional

from .dates import parse_date
from .errors import InsufficientHistory, InvariantViolation, MissingDate, ParseError

UP = "UP"
DOWN = "DOWN"


@dataclass(frozen=True)
class PriceSeries:
    """Date-sorted adjusted closes for one ticker."""

    ticker: str
    dates: tuple[date, ...]
    closes: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.dates) != len(self.closes):
            raise InvariantViolation(f"{self.ticker}: dates/closes length mismatch")
        if any(b <= a for a, b in zip(self.dates, self.dates[1:])):
            raise InvariantViolation(f"{self.ticker}: dates must be strictly increasing")
        if any(c <= 0 for c in self.closes):
            raise InvariantViolation(f"{self.ticker}: adj_close must be positive")

    def index_of(self, day: date) -> int:
        i = bisect_left(self.dates, day)
        if i == len(self.dates) or self.dates[i] != day:
            raise MissingDate(f"{self.ticker} has no price on {day.isoformat()}")
        return i

    def close_at(self, day: date) -> float:
        return self.closes[self.index_of(day)]


@dataclass(frozen=True)
class Label:
    ticker: str
    date: date
    horizon: int
    forward_return: float
    direction: str

    def __post_init__(self) -> None:
        expected = UP if self.forward_return > 0 else DOWN
        if self.direction != expected:
            raise InvariantViolation(
                f"label direction {self.direction} contradicts return {self.forward_return}"
            )


def forward_return(series: PriceSeries, day: date, horizon: int = 1) -> float:
    """Simple return from ``day`` to the horizon-th next trading date in the series."""
    if horizon < 1:
        raise InvariantViolation("horizon must be >= 1")
    i = series.index_of(day)
    j = i + horizon
    if j >= len(series.dates):
        raise InsufficientHistory(
            f"{series.ticker}: no trading date {horizon} steps after {day.isoformat()}"
        )
    return (series.closes[j] - series.closes[i]) / series.closes[i]


def label(series: PriceSeries, day: date, horizon: int = 1) -> Label:
    ret = forward_return(series, day, horizon)
    return Label(series.ticker, day, horizon, ret, UP if ret > 0 else DOWN)


@dataclass(frozen=True)
class LabelTable:
    rows: tuple[Label, ...]
    skipped: int = 0
    _index: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        self._index.update({(lab.ticker, lab.date): lab for lab in self.rows})

    def __iter__(self) -> Iterator[Label]:
        return iter(self.rows)

    def __len__(self) -> int:
        return len(self.rows)

    def lookup(self, ticker: str, day: date) -> Optional[Label]:
        return self._index.get((ticker, day))


def label_table(
    series: Iterable[PriceSeries], start: date, end: date, horizon: int = 1
) -> LabelTable:
    """One label per (ticker, trading day) in [start, end) with forward history.

    Rows are (ticker, date)-ordered; days whose horizon-step successor is
    missing are skipped and counted.
    """
    rows: list[Label] = []
    skipped = 0
    for s in sorted(series, key=lambda s: s.ticker):
        for i, day in enumerate(s.dates):
            if day < start or day >= end:
                continue
            if i + horizon >= len(s.dates):
                skipped += 1
                continue
            rows.append(label(s, day, horizon))
    return LabelTable(tuple(rows), skipped)


# ---------------------------------------------------------------------------
# prices.csv ingestion
# ---------------------------------------------------------------------------

# Extreme daily moves are flagged for the report but never dropped; the
# inputs are trusted as pre-adjusted.
EXTREME_MOVE = 0.50


def load_prices_csv(path: str) -> tuple[dict[str, PriceSeries], list[dict]]:
    """Read ``prices.csv`` (header ticker,date,adj_close) into per-ticker series.

    Returns the series keyed by ticker plus a list of flagged extreme moves.
    Malformed rows raise ParseError — price data is the ground truth and a
    silent skip there would corrupt labels.
    """
    per_ticker: dict[str, list[tuple[date, float]]] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = [r for r in fh]
    reader = csv.reader(r for r in rows if r.strip() and not r.startswith("#"))
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != ["ticker", "date", "adj_close"]:
        raise ParseError("expected header ticker,date,adj_close", 1)
    for line_no, row in enumerate(reader, start=2):
        try:
            ticker, day_s, close_s = row
            day = parse_date(day_s)
            close = float(close_s)
        except (ValueError, TypeError) as exc:
            raise ParseError(str(exc), line_no) from None
        per_ticker.setdefault(ticker, []).append((day, close))

    series: dict[str, PriceSeries] = {}
    flagged: list[dict] = []
    for ticker in sorted(per_ticker):
        points = sorted(per_ticker[ticker])
        dates = tuple(d for d, _ in points)
        closes = tuple(c for _, c in points)
        series[ticker] = PriceSeries(ticker, dates, closes)
        for (d0, c0), (d1, c1) in zip(points, points[1:]):
            move = (c1 - c0) / c0
            if abs(move) > EXTREME_MOVE:
                flagged.append({"ticker": ticker, "date": d1.isoformat(), "return": move})
    return series, flagged


def write_prices_csv(path: str, series: Iterable[PriceSeries], header_comment: str = "") -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["ticker", "date", "adj_close"])
        for s in sorted(series, key=lambda s: s.ticker):
            for day, close in zip(s.dates, s.closes):
                writer.writerow([s.ticker, day.isoformat(), repr(close)])
