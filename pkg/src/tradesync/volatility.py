"""Daily High-Low volatility and mesoscopic activity-volatility correlations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, DegenerateInputError
from .activity import ActivitySeries
from .ingest import QuoteSeries, TradingCalendar


@dataclass(frozen=True)
class VolatilitySeries:
    """nu[t] = (high - low) / open on calendar ordinal t."""

    ticker: str
    nu: np.ndarray

    def __len__(self) -> int:
        return len(self.nu)


@dataclass(frozen=True)
class MesoSeries:
    """Total operations per calendar day over all studied investors."""

    ticker: str
    ops: np.ndarray

    def __len__(self) -> int:
        return len(self.ops)


def high_low_volatility(quotes: QuoteSeries) -> VolatilitySeries:
    open_ = np.asarray(quotes.open, dtype=float)
    high = np.asarray(quotes.high, dtype=float)
    low = np.asarray(quotes.low, dtype=float)
    if np.any(open_ <= 0):
        raise DataError("open price must be positive")
    return VolatilitySeries(ticker=quotes.ticker, nu=(high - low) / open_)


def meso_series(series: dict[str, ActivitySeries], calendar: TradingCalendar) -> MesoSeries:
    ops = np.zeros(len(calendar), dtype=np.int64)
    for s in series.values():
        ops[s.first_day:s.last_day + 1] += s.counts
    return MesoSeries(ticker=calendar.ticker, ops=ops)


def _population_corr(x: np.ndarray, y: np.ndarray) -> float:
    """Product-moment correlation with population (1/T) normalization."""
    if x.size != y.size:
        raise ValueError("series lengths differ")
    if x.size < 2:
        raise DegenerateInputError("correlation needs at least 2 points")
    xc = x - x.mean()
    yc = y - y.mean()
    vx = float(np.mean(xc * xc))
    vy = float(np.mean(yc * yc))
    if vx == 0.0 or vy == 0.0:
        raise DegenerateInputError("correlation undefined for a constant series")
    r = float(np.mean(xc * yc)) / float(np.sqrt(vx * vy))
    # guard against ulp-level overshoot so |r| <= 1 holds exactly
    return min(1.0, max(-1.0, r))


def meso_long_correlation(meso: MesoSeries, vol: VolatilitySeries) -> float:
    """Correlation of total operations with same-day volatility over the whole
    calendar (the mean is subtracted, so slow level shifts do not bias it)."""
    return _population_corr(np.asarray(meso.ops, dtype=float), vol.nu)


def moving_average_residual(x: np.ndarray, window: int, mode: str = "trailing") -> np.ndarray:
    """x minus its `window`-day moving average, over the days where the
    average is defined. mode='trailing' uses days t-window+1 .. t;
    mode='centered' needs an odd window and uses t-h .. t+h."""
    x = np.asarray(x, dtype=float)
    if window < 2:
        raise ValueError("window must be >= 2")
    if window > x.size:
        raise DegenerateInputError("window longer than the series")
    kernel = np.full(window, 1.0 / window)
    ma = np.convolve(x, kernel, mode="valid")
    if mode == "trailing":
        return x[window - 1:] - ma
    if mode == "centered":
        if window % 2 == 0:
            raise ValueError("centered moving average needs an odd window")
        h = window // 2
        return x[h:x.size - h] - ma
    raise ValueError(f"unknown moving-average mode {mode!r}")


def meso_short_correlation(meso: MesoSeries, vol: VolatilitySeries,
                           window: int = 5, mode: str = "trailing") -> float:
    """Correlation of the two series after removing each one's local mean,
    capturing the short-horizon co-movement."""
    ro = moving_average_residual(np.asarray(meso.ops, dtype=float), window, mode)
    rv = moving_average_residual(vol.nu, window, mode)
    return _population_corr(ro, rv)
