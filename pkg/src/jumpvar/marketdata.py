"""Daily price ingestion, calendar alignment, gap filling and log returns.

Input files are wide CSV panels: a ``date`` column in ISO format followed by
one numeric column per asset.  An empty cell marks a missing observation.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError

__all__ = [
    "PriceSeries",
    "ReturnSeries",
    "load_prices",
    "interpolate_gaps",
    "log_returns",
    "union_calendar",
    "align_panel",
    "write_panel",
]


def _as_dates(dates) -> np.ndarray:
    return np.asarray(dates, dtype="datetime64[D]")


@dataclass(frozen=True)
class PriceSeries:
    """Dated closing prices for one asset.  ``nan`` marks a missing value."""

    asset_id: str
    dates: np.ndarray
    prices: np.ndarray

    def __post_init__(self):
        dates = _as_dates(self.dates)
        prices = np.asarray(self.prices, dtype=float)
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "prices", prices)
        if dates.ndim != 1 or prices.shape != dates.shape:
            raise DataError(f"{self.asset_id}: dates and prices must be 1-D of equal length")
        if dates.size > 1 and not np.all(dates[1:] > dates[:-1]):
            bad = np.flatnonzero(dates[1:] <= dates[:-1])[0] + 1
            raise DataError(f"{self.asset_id}: dates not strictly increasing at {dates[bad]}")
        observed = prices[~np.isnan(prices)]
        if np.any(observed <= 0) or np.any(np.isinf(observed)):
            raise DataError(f"{self.asset_id}: prices must be finite and strictly positive")

    def __len__(self):
        return self.prices.size

    @property
    def is_complete(self) -> bool:
        return not np.isnan(self.prices).any()

    def observed(self) -> "PriceSeries":
        keep = ~np.isnan(self.prices)
        return PriceSeries(self.asset_id, self.dates[keep], self.prices[keep])

    def window(self, start, end) -> "PriceSeries":
        keep = (self.dates >= np.datetime64(start, "D")) & (self.dates <= np.datetime64(end, "D"))
        return PriceSeries(self.asset_id, self.dates[keep], self.prices[keep])


@dataclass(frozen=True)
class ReturnSeries:
    asset_id: str
    dates: np.ndarray
    returns: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "dates", _as_dates(self.dates))
        object.__setattr__(self, "returns", np.asarray(self.returns, dtype=float))

    def __len__(self):
        return self.returns.size


def _parse_date(text: str) -> np.datetime64:
    text = text.strip()
    if len(text) != 10:
        raise ValueError(text)
    return np.datetime64(text, "D")


def load_prices(path, date_column: str = "date", price_columns: Sequence[str] | None = None):
    """Read a wide price CSV into one :class:`PriceSeries` per price column.

    Row numbers in error messages are 1-based file lines (the header is line 1).
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"price file not found: {path}")
    with path.open(newline="") as fh:
        rows = [row for row in csv.reader(fh)]
    rows = [r for r in rows if any(cell.strip() for cell in r)]
    if not rows:
        raise DataError(f"{path}: no data rows")
    header = [h.strip() for h in rows[0]]
    if date_column not in header:
        raise DataError(f"{path}: missing date column {date_column!r}")
    date_idx = header.index(date_column)
    if price_columns is None:
        price_columns = [h for i, h in enumerate(header) if i != date_idx]
    missing = [c for c in price_columns if c not in header]
    if missing:
        raise DataError(f"{path}: unknown price columns {missing}")
    if not price_columns:
        raise DataError(f"{path}: no price columns")
    col_idx = [header.index(c) for c in price_columns]
    body = rows[1:]
    if not body:
        raise DataError(f"{path}: no data rows")

    bad_dates, bad_cells = [], []
    dates, values = [], []
    seen = {}
    for lineno, row in enumerate(body, start=2):
        row = row + [""] * (len(header) - len(row))
        try:
            d = _parse_date(row[date_idx])
        except ValueError:
            bad_dates.append((lineno, row[date_idx]))
            continue
        if d in seen:
            raise DataError(f"{path}: duplicate date {d} (lines {seen[d]} and {lineno})")
        seen[d] = lineno
        vals = []
        for name, j in zip(price_columns, col_idx):
            cell = row[j].strip()
            if cell == "":
                vals.append(math.nan)
                continue
            try:
                vals.append(float(cell))
            except ValueError:
                bad_cells.append((lineno, name, cell))
                vals.append(math.nan)
        dates.append(d)
        values.append(vals)
    if bad_dates:
        listing = ", ".join(f"line {n}: {v!r}" for n, v in bad_dates)
        raise DataError(f"{path}: malformed dates ({listing})")
    if bad_cells:
        listing = ", ".join(f"line {n} column {c}: {v!r}" for n, c, v in bad_cells)
        raise DataError(f"{path}: non-numeric prices ({listing})")

    dates = np.array(dates, dtype="datetime64[D]")
    values = np.array(values, dtype=float).reshape(len(dates), len(price_columns))
    order = np.argsort(dates, kind="stable")
    dates, values = dates[order], values[order]
    return [PriceSeries(name, dates, values[:, k]) for k, name in enumerate(price_columns)]


def interpolate_gaps(series: PriceSeries, calendar=None) -> PriceSeries:
    """Place ``series`` on ``calendar`` and fill interior gaps linearly.

    Interpolation weights use calendar positions (trading-day counts), not
    calendar-day distances.  Calendar dates before the first or after the last
    observation are an error since nothing is extrapolated.
    """
    obs = series.observed()
    if len(obs) < 2:
        raise DataError(f"{series.asset_id}: need at least 2 observed prices to interpolate")
    calendar = series.dates if calendar is None else _as_dates(calendar)
    if calendar.size and not np.all(calendar[1:] > calendar[:-1]):
        raise DataError("calendar must be strictly increasing")
    if calendar[0] < obs.dates[0] or calendar[-1] > obs.dates[-1]:
        raise DataError(
            f"{series.asset_id}: calendar {calendar[0]}..{calendar[-1]} extends beyond observed "
            f"range {obs.dates[0]}..{obs.dates[-1]} (no extrapolation)"
        )
    inside = (obs.dates >= calendar[0]) & (obs.dates <= calendar[-1])
    obs_dates, obs_prices = obs.dates[inside], obs.prices[inside]
    pos = np.searchsorted(calendar, obs_dates)
    if np.any(pos >= calendar.size) or np.any(calendar[np.minimum(pos, calendar.size - 1)] != obs_dates):
        raise DataError(f"{series.asset_id}: observed dates missing from calendar")
    grid = np.arange(calendar.size, dtype=float)
    filled = np.interp(grid, pos.astype(float), obs_prices)
    filled[pos] = obs_prices
    return PriceSeries(series.asset_id, calendar, filled)


def log_returns(series: PriceSeries) -> ReturnSeries:
    p = series.prices
    if p.size < 2:
        raise DataError(f"{series.asset_id}: need at least 2 prices for returns")
    if np.isnan(p).any():
        raise DataError(f"{series.asset_id}: series has gaps; interpolate first")
    if np.any(p <= 0):
        raise DataError(f"{series.asset_id}: non-positive price at {series.dates[np.argmax(p <= 0)]}")
    return ReturnSeries(series.asset_id, series.dates[1:], np.log(p[1:] / p[:-1]))


def union_calendar(panel: Iterable[PriceSeries]) -> np.ndarray:
    dates = [s.observed().dates for s in panel]
    if not dates:
        return np.array([], dtype="datetime64[D]")
    return np.unique(np.concatenate(dates))


def align_panel(panel: Sequence[PriceSeries]) -> list[PriceSeries]:
    """Gap-free panel on the union calendar, truncated to the common window."""
    if not panel:
        raise DataError("empty panel")
    observed = [s.observed() for s in panel]
    for s in observed:
        if len(s) < 2:
            raise DataError(f"{s.asset_id}: fewer than 2 observed prices")
    start = max(s.dates[0] for s in observed)
    end = min(s.dates[-1] for s in observed)
    if start >= end:
        raise DataError("assets have no overlapping date window")
    cal = union_calendar(observed)
    cal = cal[(cal >= start) & (cal <= end)]
    return [interpolate_gaps(s, cal) for s in panel]


def write_panel(path, panel: Sequence[PriceSeries], fmt=repr) -> None:
    """Write a wide CSV.  The default ``repr`` formatting round-trips floats exactly."""
    dates = panel[0].dates
    for s in panel[1:]:
        if not np.array_equal(s.dates, dates):
            raise DataError("panel series are not aligned")
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date"] + [s.asset_id for s in panel])
        for k, d in enumerate(dates):
            row = [str(d)]
            for s in panel:
                v = float(s.prices[k])
                row.append("" if math.isnan(v) else fmt(v))
            w.writerow(row)
