"""Daily time series: CSV ingestion, alignment, rank transform and derived series.

Every function here is pure. Series are regularly sampled at one day; gaps in
the date axis are treated as ingestion errors unless forward filling is asked
for explicitly.
"""

from __future__ import annotations

import csv
import datetime as _dt
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import rankdata

from .errors import DataError

ONE_DAY = _dt.timedelta(days=1)

__all__ = [
    "TimeSeries",
    "TrendsBlock",
    "load_csv",
    "write_csv",
    "align_intersect",
    "restrict",
    "quantile_transform",
    "chain_trends_blocks",
    "derive_series",
]


def _as_date(value) -> _dt.date:
    if isinstance(value, _dt.datetime):
        return value.date()
    if isinstance(value, _dt.date):
        return value
    if isinstance(value, np.datetime64):
        return value.astype("datetime64[D]").item()
    return _dt.date.fromisoformat(str(value))


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Named daily series starting at ``start_date``.

    ``values`` is stored as a read-only float64 array.
    """

    name: str
    start_date: _dt.date
    values: np.ndarray
    step: _dt.timedelta = field(default=ONE_DAY)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 1:
            raise DataError(f"{self.name}: values must be one-dimensional")
        if values.size < 2:
            raise DataError(f"{self.name}: need at least 2 observations, got {values.size}")
        if not np.all(np.isfinite(values)):
            bad = int(np.flatnonzero(~np.isfinite(values))[0])
            raise DataError(f"{self.name}: non-finite value at {self.start_date + bad * ONE_DAY}")
        if self.step != ONE_DAY:
            raise DataError(f"{self.name}: only daily sampling is supported")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "start_date", _as_date(self.start_date))

    def __len__(self):
        return self.values.size

    def __eq__(self, other):
        if not isinstance(other, TimeSeries):
            return NotImplemented
        return (
            self.name == other.name
            and self.start_date == other.start_date
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def end_date(self) -> _dt.date:
        return self.start_date + (self.n - 1) * ONE_DAY

    @property
    def dates(self) -> np.ndarray:
        start = np.datetime64(self.start_date, "D")
        return start + np.arange(self.n)

    def replace(self, **changes) -> "TimeSeries":
        kw = dict(name=self.name, start_date=self.start_date, values=self.values)
        kw.update(changes)
        return TimeSeries(**kw)


@dataclass(frozen=True, eq=False)
class TrendsBlock:
    """One block of search-interest data with its own arbitrary normalization."""

    start_date: _dt.date
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "start_date", _as_date(self.start_date))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))

    @property
    def end_date(self) -> _dt.date:
        return self.start_date + (self.values.size - 1) * ONE_DAY

    @classmethod
    def from_series(cls, ts: TimeSeries) -> "TrendsBlock":
        return cls(ts.start_date, ts.values)


# ---------------------------------------------------------------------------
# CSV


def load_csv(path, date_column="date", value_column="value", fill=None, name=None) -> TimeSeries:
    """Read one column of a daily CSV file into a :class:`TimeSeries`.

    Rows may come in any order; they are sorted by date. Duplicate dates,
    unparseable dates or values and missing days raise :class:`DataError`
    naming the offending row. With ``fill="forward"`` missing days and empty
    value cells take the previous observation instead.
    """
    if fill not in (None, "none", "forward"):
        raise DataError(f"unknown fill policy {fill!r}")
    forward = fill == "forward"
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")

    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in (date_column, value_column):
            if col not in header:
                raise DataError(f"{path}: column {col!r} not found (have {header})")
        rows = {}
        for lineno, row in enumerate(reader, start=2):
            raw_date = (row[date_column] or "").strip()
            try:
                day = _dt.date.fromisoformat(raw_date)
            except ValueError:
                raise DataError(f"{path}:{lineno}: cannot parse date {raw_date!r}") from None
            if day in rows:
                raise DataError(f"{path}:{lineno}: duplicate date {day}")
            raw_value = (row[value_column] or "").strip()
            if raw_value == "":
                if not forward:
                    raise DataError(f"{path}:{lineno}: missing value on {day}")
                rows[day] = None
                continue
            try:
                rows[day] = float(raw_value)
            except ValueError:
                raise DataError(f"{path}:{lineno}: cannot parse value {raw_value!r}") from None

    if len(rows) < 2:
        raise DataError(f"{path}: need at least 2 rows, got {len(rows)}")
    days = sorted(rows)
    start, end = days[0], days[-1]
    n = (end - start).days + 1
    values = np.empty(n)
    last = None
    for i in range(n):
        day = start + i * ONE_DAY
        v = rows.get(day)
        if v is None:
            if not forward:
                raise DataError(f"{path}: gap in date range, {day} is missing")
            if last is None:
                raise DataError(f"{path}: cannot forward-fill {day}, no earlier value")
            v = last
        values[i] = v
        last = v
    return TimeSeries(name or value_column, start, values)


def write_csv(path, *series: TimeSeries, date_column="date"):
    """Write one or more aligned series to CSV, one column per series name.

    Values are written with ``repr`` so that :func:`load_csv` reads them back
    exactly.
    """
    if not series:
        raise ValueError("nothing to write")
    first = series[0]
    for s in series[1:]:
        if s.start_date != first.start_date or s.n != first.n:
            raise DataError("series written to one CSV must share a date axis")
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([date_column] + [s.name for s in series])
        for i in range(first.n):
            day = first.start_date + i * ONE_DAY
            w.writerow([day.isoformat()] + [repr(float(s.values[i])) for s in series])
    return path


# ---------------------------------------------------------------------------
# alignment


def restrict(ts: TimeSeries, start=None, end=None) -> TimeSeries:
    """Cut a series to the inclusive window ``[start, end]``."""
    lo = ts.start_date if start is None else max(ts.start_date, _as_date(start))
    hi = ts.end_date if end is None else min(ts.end_date, _as_date(end))
    n = (hi - lo).days + 1
    if n < 2:
        raise DataError(f"{ts.name}: window {start}..{end} leaves fewer than 2 days")
    i0 = (lo - ts.start_date).days
    return ts.replace(start_date=lo, values=ts.values[i0 : i0 + n])


def align_intersect(a: TimeSeries, b: TimeSeries) -> tuple[TimeSeries, TimeSeries]:
    """Cut both series to their common date range."""
    lo = max(a.start_date, b.start_date)
    hi = min(a.end_date, b.end_date)
    if (hi - lo).days + 1 < 2:
        raise DataError(
            f"date ranges do not overlap by 2+ days: {a.name} {a.start_date}..{a.end_date}, "
            f"{b.name} {b.start_date}..{b.end_date}"
        )
    if lo == a.start_date and hi == a.end_date and lo == b.start_date and hi == b.end_date:
        return a, b
    return restrict(a, lo, hi), restrict(b, lo, hi)


def _check_aligned(*series: TimeSeries):
    first = series[0]
    for s in series[1:]:
        if s.start_date != first.start_date or s.n != first.n:
            raise DataError(
                f"series not aligned: {first.name} {first.start_date}+{first.n}, "
                f"{s.name} {s.start_date}+{s.n}"
            )


# ---------------------------------------------------------------------------
# transforms


def quantile_transform(ts: TimeSeries) -> TimeSeries:
    """Replace each value by its average rank divided by ``N + 1``.

    The result lies strictly inside (0, 1) and depends on the input only
    through its ordering.
    """
    ranks = rankdata(ts.values, method="average")
    return ts.replace(values=ranks / (ts.n + 1))


def chain_trends_blocks(blocks, overlap_window=30, name="trends") -> TimeSeries:
    """Stitch overlapping search-interest blocks into one daily series.

    Each incoming block is rescaled so that its mean over the last
    ``overlap_window`` days it shares with the previous (already rescaled)
    block matches that block's mean there; only its days past the end of the
    previous block are appended. The first block keeps its own scale.
    """
    blocks = [b if isinstance(b, TrendsBlock) else TrendsBlock.from_series(b) for b in blocks]
    if not blocks:
        raise DataError("no blocks to chain")
    if overlap_window < 1:
        raise DataError(f"overlap_window must be positive, got {overlap_window}")

    prev = blocks[0]
    prev_values = prev.values
    out = [prev_values]
    for k, block in enumerate(blocks[1:], start=1):
        if block.start_date < prev.start_date:
            raise DataError(f"block {k} starts before block {k - 1}; sort blocks by start date")
        overlap = (prev.end_date - block.start_date).days + 1
        if overlap < overlap_window:
            raise DataError(
                f"block {k} overlaps block {k - 1} by {max(overlap, 0)} days, "
                f"need {overlap_window}"
            )
        win_start = prev.end_date - (overlap_window - 1) * ONE_DAY
        i_prev = (win_start - prev.start_date).days
        i_next = (win_start - block.start_date).days
        ref = prev_values[i_prev : i_prev + overlap_window].mean()
        incoming = block.values[i_next : i_next + overlap_window].mean()
        if incoming == 0:
            raise DataError(f"block {k} has zero mean over the overlap window starting {win_start}")
        scaled = block.values * (ref / incoming)
        out.append(scaled[overlap:])
        prev, prev_values = block, scaled
    return TimeSeries(name, blocks[0].start_date, np.concatenate(out))


DERIVED_KINDS = ("ratio", "per_event_price")


def derive_series(kind: str, a: TimeSeries, b: TimeSeries) -> TimeSeries:
    """Elementwise ``a / b`` for aligned series.

    ``ratio`` gives e.g. the trade/exchange volume ratio; ``per_event_price``
    gives the average value per transaction (daily volume over daily
    transaction count). Both require a strictly positive denominator.
    """
    if kind not in DERIVED_KINDS:
        raise DataError(f"unknown derived-series kind {kind!r}; expected one of {DERIVED_KINDS}")
    _check_aligned(a, b)
    bad = np.flatnonzero(~(b.values > 0))
    if bad.size:
        day = b.start_date + int(bad[0]) * ONE_DAY
        raise DataError(f"{b.name}: non-positive denominator {b.values[bad[0]]!r} on {day}")
    values = a.values / b.values
    if not np.all(np.isfinite(values)):
        day = b.start_date + int(np.flatnonzero(~np.isfinite(values))[0]) * ONE_DAY
        raise DataError(f"{kind}: non-finite result on {day}")
    return TimeSeries(f"{kind}({a.name}/{b.name})", a.start_date, values)


def days_inclusive(start, end) -> int:
    return (_as_date(end) - _as_date(start)).days + 1

