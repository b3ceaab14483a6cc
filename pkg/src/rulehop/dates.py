"""Calendar-date helpers; day granularity everywhere, ISO-8601 on the wire."""

from __future__ import annotations

import datetime as _dt

# Sentinels used by the traversal kernel for open intervals / always-visible nodes.
OPEN_ORD = 2**62
NEVER_ORD = -(2**62)


def parse_date(text: str) -> _dt.date:
    """Parse a strict YYYY-MM-DD date string."""
    return _dt.date.fromisoformat(text)


def fmt_date(day: _dt.date) -> str:
    return day.isoformat()


def to_ordinal(day: _dt.date) -> int:
    return day.toordinal()


def day_span(start: _dt.date, end: _dt.date):
    """Yield every calendar date in the half-open range [start, end)."""
    cur = start
    one = _dt.timedelta(days=1)
    while cur < end:
        yield cur
        cur += one


def weekdays(start: _dt.date, end: _dt.date):
    """Yield Monday-to-Friday dates in [start, end); the synthetic trading calendar."""
    for day in day_span(start, end):
        if day.weekday() < 5:
            yield day
