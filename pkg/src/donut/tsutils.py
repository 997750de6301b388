"""Shared low-level time series helpers: autocorrelations, moving averages,
classical decomposition. Everything operates on plain float64 numpy arrays."""

from __future__ import annotations

import numpy as np


def acf(y, nlags):
    """Autocorrelation function at lags 0..nlags.

    Uses the standard biased estimator: the full-sample mean and the
    lag-0 sum of squares appear in every term, so acf(y, k) for a
    constant series is undefined and returned as zeros.
    """
    y = np.asarray(y, dtype=float)
    n = len(y)
    e = y - y.mean()
    denom = float(np.dot(e, e))
    out = np.zeros(nlags + 1)
    out[0] = 1.0
    if denom <= 0.0 or n < 2:
        out[0] = 0.0
        return out
    for k in range(1, min(nlags, n - 1) + 1):
        out[k] = float(np.dot(e[k:], e[:-k])) / denom
    return out


def pacf(y, nlags):
    """Partial autocorrelations at lags 1..nlags via Durbin-Levinson."""
    rho = acf(y, nlags)
    if rho[0] == 0.0:
        return np.zeros(nlags)
    out = np.zeros(nlags)
    phi_prev = np.zeros(nlags + 1)
    phi_cur = np.zeros(nlags + 1)
    for k in range(1, nlags + 1):
        if k == 1:
            phi_cur[1] = rho[1]
        else:
            num = rho[k] - float(np.dot(phi_prev[1:k], rho[k - 1:0:-1]))
            den = 1.0 - float(np.dot(phi_prev[1:k], rho[1:k]))
            if abs(den) < 1e-12:
                out[k - 1:] = 0.0
                return out
            phi_cur[k] = num / den
            for j in range(1, k):
                phi_cur[j] = phi_prev[j] - phi_cur[k] * phi_prev[k - j]
        out[k - 1] = phi_cur[k]
        phi_prev, phi_cur = phi_cur.copy(), phi_prev
    return out


def centered_ma(y, m):
    """Centered moving average of order m (2 x m average when m is even).

    Returns an array of the same length with NaN at the edges where the
    window does not fit.
    """
    y = np.asarray(y, dtype=float)
    n = len(y)
    out = np.full(n, np.nan)
    if m < 1 or n < m + (m % 2 == 0):
        return out
    if m == 1:
        return y.copy()
    if m % 2 == 1:
        k = m // 2
        kernel = np.full(m, 1.0 / m)
    else:
        k = m // 2
        kernel = np.full(m + 1, 1.0 / m)
        kernel[0] *= 0.5
        kernel[-1] *= 0.5
    smoothed = np.convolve(y, kernel[::-1], mode="valid")
    out[k:n - k] = smoothed
    return out


def seasonal_phase_means(values, phases, m):
    """Mean of `values` grouped by phase index, NaN entries skipped.

    Phases with no finite observation come back as 0.
    """
    values = np.asarray(values, dtype=float)
    sums = np.zeros(m)
    counts = np.zeros(m)
    ok = np.isfinite(values)
    np.add.at(sums, phases[ok], values[ok])
    np.add.at(counts, phases[ok], 1.0)
    out = np.zeros(m)
    nz = counts > 0
    out[nz] = sums[nz] / counts[nz]
    return out


def classical_decompose(y, m):
    """Additive classical decomposition into (trend, seasonal, remainder).

    trend is the centered MA (NaN at edges), seasonal is the length-m
    per-phase mean of the detrended interior normalised to sum zero,
    remainder = y - trend - seasonal on the interior (NaN at edges).
    Requires m >= 1; for m == 1 seasonal is the zero vector of length 1.
    """
    y = np.asarray(y, dtype=float)
    n = len(y)
    trend = centered_ma(y, m)
    if m <= 1:
        seasonal = np.zeros(1)
        remainder = y - trend
        return trend, seasonal, remainder
    phases = np.arange(n) % m
    detrended = y - trend
    seasonal = seasonal_phase_means(detrended, phases, m)
    seasonal = seasonal - seasonal.mean()
    remainder = y - trend - seasonal[phases]
    return trend, seasonal, remainder


def ols_line(y):
    """Least squares line y_t ~ a + b*t for t = 1..n; returns (a, b)."""
    y = np.asarray(y, dtype=float)
    n = len(y)
    t = np.arange(1.0, n + 1.0)
    tbar = t.mean()
    ybar = y.mean()
    stt = float(np.dot(t - tbar, t - tbar))
    if stt <= 0.0:
        return ybar, 0.0
    b = float(np.dot(t - tbar, y - ybar)) / stt
    a = ybar - b * tbar
    return a, b
