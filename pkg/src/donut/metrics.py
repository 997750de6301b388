"""Forecast accuracy metrics: sMAPE, MASE, the seasonally adjusted naive
reference forecast, and OWA aggregation against that reference."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tsutils import acf, centered_ma, seasonal_phase_means


class MetricError(Exception):
    pass


class LengthMismatch(MetricError):
    def __init__(self, expected, got):
        super().__init__(f"forecast length {got} does not match actual length {expected}")


class NMustExceedM(MetricError):
    def __init__(self, n, m):
        super().__init__(f"scaled error needs n > m, got n = {n}, m = {m}")


class DegenerateScale(MetricError):
    def __init__(self):
        super().__init__("seasonal naive in-sample MAE is zero, MASE undefined")


@dataclass(frozen=True)
class LossReport:
    smape: float
    mase: float
    owa: float


def smape(actual, forecast):
    """Symmetric MAPE in percent: (200/h) * sum |y - f| / (|y| + |f|).

    A term with |y| + |f| == 0 contributes zero.
    """
    y = np.asarray(actual, dtype=float)
    f = np.asarray(forecast, dtype=float)
    if y.shape != f.shape:
        raise LengthMismatch(y.shape, f.shape)
    denom = np.abs(y) + np.abs(f)
    num = np.abs(y - f)
    terms = np.zeros_like(num)
    nz = denom > 0.0
    terms[nz] = num[nz] / denom[nz]
    return float(200.0 * terms.mean())


def mase_denominator(train, m):
    """In-sample seasonal naive MAE: mean |y_t - y_{t-m}| over t = m..n-1."""
    y = np.asarray(train, dtype=float)
    n = len(y)
    if n <= m:
        raise NMustExceedM(n, m)
    return float(np.abs(y[m:] - y[:-m]).mean())


def mase(train, m, actual, forecast):
    """Mean absolute scaled error against the in-sample seasonal naive MAE."""
    y = np.asarray(actual, dtype=float)
    f = np.asarray(forecast, dtype=float)
    if y.shape != f.shape:
        raise LengthMismatch(y.shape, f.shape)
    d = mase_denominator(train, m)
    if d == 0.0:
        raise DegenerateScale()
    return float(np.abs(y - f).mean() / d)


def is_seasonal(train, m):
    """90% confidence test on the lag-m autocorrelation.

    Requires m > 1 and n >= 3m; the threshold uses the cumulative
    Bartlett variance of the lower lags.
    """
    y = np.asarray(train, dtype=float)
    n = len(y)
    if m <= 1 or n < 3 * m:
        return False
    rho = acf(y, m)
    crit = 1.645 * np.sqrt((1.0 + 2.0 * float(np.dot(rho[1:m], rho[1:m]))) / n)
    return bool(abs(rho[m]) > crit)


def _seasonal_indices(train, m):
    # multiplicative classical decomposition: per-phase mean of y / trend,
    # normalised to mean 1
    y = np.asarray(train, dtype=float)
    n = len(y)
    trend = centered_ma(y, m)
    ok = np.isfinite(trend)
    if not ok.any():
        raise ValueError("series too short for the trend window")
    if np.any(trend[ok] <= 0.0) or np.any(y[ok] <= 0.0):
        raise ValueError("nonpositive values, multiplicative split undefined")
    ratios = np.full(n, np.nan)
    ratios[ok] = y[ok] / trend[ok]
    idx = seasonal_phase_means(ratios, np.arange(n) % m, m)
    if np.any(idx <= 0.0):
        raise ValueError("degenerate seasonal index")
    return idx / idx.mean()


def naive2(train, m, h):
    """Reference forecast: naive on the seasonally adjusted series.

    When the seasonality test passes, the series is divided by its
    multiplicative seasonal indices, the last adjusted value is repeated
    and re-multiplied by the indices of the future phases. Any numerical
    failure in the adjustment falls back to the plain naive forecast.
    """
    y = np.asarray(train, dtype=float)
    n = len(y)
    if n < 1:
        raise MetricError("cannot forecast from an empty series")
    if m > 1 and is_seasonal(y, m):
        try:
            idx = _seasonal_indices(y, m)
            adjusted_last = y[-1] / idx[(n - 1) % m]
            future = (n + np.arange(h)) % m
            fc = adjusted_last * idx[future]
            if np.all(np.isfinite(fc)):
                return fc
        except (ValueError, FloatingPointError, ZeroDivisionError):
            pass
    return np.full(h, y[-1])


def _as_loss_array(reports):
    if isinstance(reports, np.ndarray):
        arr = np.asarray(reports, dtype=float)
    else:
        rows = []
        for r in reports:
            if isinstance(r, LossReport):
                rows.append((r.smape, r.mase))
            else:
                rows.append((float(r[0]), float(r[1])))
        arr = np.asarray(rows, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise MetricError("expected an (n, 2) array of (smape, mase) pairs")
    return arr


def owa(method, reference, mode="pooled", floor=1e-9):
    """Overall weighted average of sMAPE and MASE ratios vs the reference.

    method and reference are (n, 2) arrays (or LossReport sequences) of
    per-series (smape, mase). ``pooled`` averages each metric over the
    corpus before taking ratios and returns a scalar; ``per_series``
    takes the two ratios per series and returns one OWA per series, with
    reference denominators floored at ``floor`` so the value stays
    finite.
    """
    a = _as_loss_array(method)
    b = _as_loss_array(reference)
    if a.shape != b.shape:
        raise LengthMismatch(b.shape, a.shape)
    if mode == "pooled":
        sm = a[:, 0].mean() / max(b[:, 0].mean(), floor)
        ms = a[:, 1].mean() / max(b[:, 1].mean(), floor)
        return float(0.5 * (sm + ms))
    if mode == "per_series":
        sm = a[:, 0] / np.maximum(b[:, 0], floor)
        ms = a[:, 1] / np.maximum(b[:, 1], floor)
        return 0.5 * (sm + ms)
    raise ValueError(f"unknown aggregation mode {mode!r}")


def owa_single(smape_value, mase_value, smape_ref, mase_ref, floor=1e-9):
    """Per-series OWA with floored reference denominators."""
    return 0.5 * (smape_value / max(smape_ref, floor)
                  + mase_value / max(mase_ref, floor))
