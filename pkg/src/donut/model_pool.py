"""The 14-model forecast pool behind a uniform fit/forecast contract.

Every model is a pure function of (train, m, h). Any fitting failure or
non-finite output falls back to the naive forecast and raises the
per-model fallback flag, so a full matrix always comes out.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from itertools import product

import numpy as np

from .tsutils import classical_decompose, ols_line


class ModelId(Enum):
    NAIVE = "Naive"
    SEASONAL_NAIVE = "SeasonalNaive"
    RW_DRIFT = "RWDrift"
    THETA = "Theta"
    SES = "SES"
    HOLT = "Holt"
    HOLT_WINTERS = "HoltWinters"
    AR_AIC = "ArAic"
    DECOMPOSE_AR = "DecomposeAr"
    OLS_TREND = "OlsTrend"
    ORNSTEIN_UHLENBECK = "OrnsteinUhlenbeck"
    LGT_POINT = "LgtPoint"
    QUANTILE_99 = "Quantile99"
    QUANTILE_01 = "Quantile01"


MODEL_ORDER = tuple(ModelId)

RATE_GRID = tuple(np.arange(1, 10) / 10.0)


class FitFailure(Exception):
    pass


@dataclass(frozen=True)
class OuParams:
    gamma: float
    m_level: float
    sigma: float


@dataclass(frozen=True)
class LgtParams:
    level: float
    trend: float
    xi1: float
    xi2: float
    lam: float
    seasonal: np.ndarray
    rate_level: float
    rate_trend: float
    rate_seasonal: float
    sse: float


@dataclass
class ForecastMatrix:
    series_id: str
    b: np.ndarray              # (14, h)
    fallback_flags: np.ndarray  # (14,) bool

    def row(self, model):
        return self.b[MODEL_ORDER.index(model)]


# ---------------------------------------------------------------- simple rows

def naive_forecast(train, h):
    y = np.asarray(train, dtype=float)
    return np.full(h, y[-1])


def seasonal_naive_forecast(train, m, h):
    y = np.asarray(train, dtype=float)
    n = len(y)
    if m < 1 or n < m:
        raise FitFailure("need at least one full season")
    last = y[n - m:]
    return last[np.arange(h) % m]


def drift_forecast(train, h):
    y = np.asarray(train, dtype=float)
    if len(y) < 2:
        raise FitFailure("need two points for a drift")
    slope = (y[-1] - y[0]) / (len(y) - 1)
    return y[-1] + slope * np.arange(1, h + 1)


def ols_trend_forecast(train, h):
    y = np.asarray(train, dtype=float)
    if len(y) < 2:
        raise FitFailure("need two points for a line")
    a, b = ols_line(y)
    t = np.arange(len(y) + 1, len(y) + h + 1, dtype=float)
    return a + b * t


# -------------------------------------------------- smoothing family (SSE grid)

def _ses_grid(y, alphas):
    # one-step-ahead SSE for every alpha simultaneously
    a = np.asarray(alphas, dtype=float)
    level = np.full(a.shape, y[0])
    sse = np.zeros(a.shape)
    for t in range(1, len(y)):
        err = y[t] - level
        sse += err * err
        level = level + a * err
    return sse, level


def ses_fit(train):
    """Grid-searched simple exponential smoothing: (alpha, level, sse)."""
    y = np.asarray(train, dtype=float)
    if len(y) < 2:
        raise FitFailure("need two points")
    sse, level = _ses_grid(y, RATE_GRID)
    i = int(np.argmin(sse))
    return float(RATE_GRID[i]), float(level[i]), float(sse[i])


def ses_forecast(train, h):
    _, level, _ = ses_fit(train)
    return np.full(h, level)


def holt_fit(train):
    """Grid-searched additive Holt in error-correction form.

    Returns (alpha, beta, level, trend, sse); beta is the trend rate.
    """
    y = np.asarray(train, dtype=float)
    if len(y) < 3:
        raise FitFailure("need three points")
    av, bv = np.meshgrid(RATE_GRID, RATE_GRID, indexing="ij")
    av = av.ravel()
    bv = bv.ravel()
    level = np.full(av.shape, y[0])
    trend = np.full(av.shape, y[1] - y[0])
    sse = np.zeros(av.shape)
    for t in range(1, len(y)):
        pred = level + trend
        err = y[t] - pred
        sse += err * err
        level = pred + av * err
        trend = trend + av * bv * err
    i = int(np.argmin(sse))
    return float(av[i]), float(bv[i]), float(level[i]), float(trend[i]), float(sse[i])


def holt_forecast(train, h):
    _, _, level, trend, _ = holt_fit(train)
    return level + trend * np.arange(1, h + 1)


def _hw_init(y, m):
    # level/trend from the first two seasons, additive offsets from season one
    mean1 = y[:m].mean()
    mean2 = y[m:2 * m].mean()
    b0 = (mean2 - mean1) / m
    l0 = mean1 + b0 * (m - 1) / 2.0
    s0 = y[:m] - (mean1 + (np.arange(m) - (m - 1) / 2.0) * b0)
    return l0, b0, s0 - s0.mean()


def holt_winters_fit(train, m):
    """Grid-searched additive Holt-Winters: (alpha, beta, gamma, level,
    trend, seasonal, sse). Needs m > 1 and n >= 2m + 2."""
    y = np.asarray(train, dtype=float)
    n = len(y)
    if m <= 1 or n < 2 * m + 2:
        raise FitFailure("series too short for a seasonal fit")
    l0, b0, s0 = _hw_init(y, m)
    av, bv, gv = np.meshgrid(RATE_GRID, RATE_GRID, RATE_GRID, indexing="ij")
    av = av.ravel()
    bv = bv.ravel()
    gv = gv.ravel()
    N = len(av)
    level = np.full(N, l0)
    trend = np.full(N, b0)
    seas = np.tile(s0, (N, 1))
    sse = np.zeros(N)
    for t in range(m, n):
        ph = t % m
        pred = level + trend + seas[:, ph]
        err = y[t] - pred
        sse += err * err
        new_level = level + trend + av * err
        trend = trend + av * bv * err
        seas[:, ph] = seas[:, ph] + gv * (1.0 - av) * err
        level = new_level
    i = int(np.argmin(sse))
    return (float(av[i]), float(bv[i]), float(gv[i]), float(level[i]),
            float(trend[i]), seas[i].copy(), float(sse[i]))


def holt_winters_forecast(train, m, h):
    _, _, _, level, trend, seas, _ = holt_winters_fit(train, m)
    n = len(train)
    k = np.arange(1, h + 1)
    return level + trend * k + seas[(n - 1 + k) % m]


def theta_forecast(train, h):
    """Equal-weight average of the OLS trend line and SES applied to the
    doubled-curvature line (2y - line)."""
    y = np.asarray(train, dtype=float)
    n = len(y)
    if n < 3:
        raise FitFailure("need three points")
    a, b = ols_line(y)
    line = a + b * np.arange(1.0, n + 1.0)
    _, level, _ = ses_fit(2.0 * y - line)
    k = np.arange(1, h + 1)
    return 0.5 * (a + b * (n + k)) + 0.5 * level


# ------------------------------------------------------------- autoregression

def ar_fit_aic(train, max_lag=5):
    """AR(p) by least squares, p <= max_lag chosen by AIC on a common sample.

    Returns (p, coef) with coef = [intercept, phi_1..phi_p].
    """
    y = np.asarray(train, dtype=float)
    n = len(y)
    pmax = min(max_lag, (n - 2) // 2)
    if pmax < 0:
        raise FitFailure("series too short")
    rows = n - pmax
    target = y[pmax:]
    best_p = 0
    best_aic = np.inf
    for p in range(pmax + 1):
        X = np.ones((rows, p + 1))
        for j in range(1, p + 1):
            X[:, j] = y[pmax - j:n - j]
        coef, _, _, _ = np.linalg.lstsq(X, target, rcond=None)
        resid = target - X @ coef
        sse = max(float(resid @ resid), 1e-30)
        aic = rows * np.log(sse / rows) + 2.0 * (p + 1)
        if aic < best_aic:
            best_aic = aic
            best_p = p
    # refit the winner on its maximal sample
    p = best_p
    rows = n - p
    X = np.ones((rows, p + 1))
    for j in range(1, p + 1):
        X[:, j] = y[p - j:n - j]
    coef, _, _, _ = np.linalg.lstsq(X, y[p:], rcond=None)
    if not np.all(np.isfinite(coef)):
        raise FitFailure("non-finite AR coefficients")
    return p, coef


def ar_residuals(train, max_lag=5):
    """Residuals of the AIC-selected AR fit, aligned to t = p..n-1."""
    y = np.asarray(train, dtype=float)
    p, coef = ar_fit_aic(y, max_lag)
    n = len(y)
    X = np.ones((n - p, p + 1))
    for j in range(1, p + 1):
        X[:, j] = y[p - j:n - j]
    return y[p:] - X @ coef


def _ar_extrapolate(history, coef, p, h):
    buf = list(history[len(history) - p:]) if p > 0 else []
    out = np.empty(h)
    for k in range(h):
        v = coef[0]
        for j in range(1, p + 1):
            v += coef[j] * buf[-j]
        out[k] = v
        if p > 0:
            buf.append(v)
    return out


def ar_aic_forecast(train, h):
    y = np.asarray(train, dtype=float)
    p, coef = ar_fit_aic(y)
    return _ar_extrapolate(y, coef, p, h)


def decompose_ar_forecast(train, m, h):
    """Classical additive decomposition, AR on the adjusted series, then
    the seasonal pattern re-added. Falls through to plain AR when m = 1
    or the series is too short to decompose."""
    y = np.asarray(train, dtype=float)
    n = len(y)
    if m <= 1 or n < 2 * m + 2:
        return ar_aic_forecast(y, h)
    _, seasonal, _ = classical_decompose(y, m)
    adjusted = y - seasonal[np.arange(n) % m]
    p, coef = ar_fit_aic(adjusted)
    fc = _ar_extrapolate(adjusted, coef, p, h)
    return fc + seasonal[(n + np.arange(h)) % m]


# ------------------------------------------------------------ mean reversion

def ou_fit(train):
    """Least-squares fit of the discretised mean-reversion regression
    dy_t = gamma * (m_level - y_{t-1}) + eps."""
    y = np.asarray(train, dtype=float)
    if len(y) < 3:
        raise FitFailure("need three points")
    dy = np.diff(y)
    prev = y[:-1]
    pbar = prev.mean()
    dbar = dy.mean()
    spp = float(np.dot(prev - pbar, prev - pbar))
    if spp <= 0.0:
        # constant history: already at the long-run mean
        return OuParams(gamma=0.0, m_level=float(y[-1]), sigma=0.0)
    slope = float(np.dot(prev - pbar, dy - dbar)) / spp
    intercept = dbar - slope * pbar
    if not (np.isfinite(slope) and np.isfinite(intercept)):
        raise FitFailure("non-finite reversion estimate")
    if slope < 0.0:
        m_level = -intercept / slope
    else:
        m_level = float(y.mean())
    gamma = min(max(-slope, 0.0), 1.0)
    resid = dy - (intercept + slope * prev)
    sigma = float(resid.std())
    if not (np.isfinite(gamma) and np.isfinite(m_level)):
        raise FitFailure("non-finite reversion estimate")
    return OuParams(gamma=gamma, m_level=m_level, sigma=sigma)


def ou_forecast(train, h):
    """Deterministic expectation path with the diffusion term zeroed."""
    y = np.asarray(train, dtype=float)
    params = ou_fit(y)
    out = np.empty(h)
    cur = y[-1]
    for k in range(h):
        cur = cur + params.gamma * (params.m_level - cur)
        out[k] = cur
    return out


# ------------------------------------------------- local/global trend  (LGT)

_XI_GRID = (0.0, 0.25, 0.5, 0.75, 1.0)
_LAM_GRID = (0.0, 0.25, 0.5, 0.75, 1.0)


def _lgt_combos(seasonal):
    # lambda-major blocks; when xi2 = 0 the exponent is inert, so only
    # lambda = 0 carries those points (the minimum over the lattice is
    # unchanged)
    rs_vals = RATE_GRID if seasonal else (0.0,)
    cols = [[] for _ in range(6)]
    blocks = []
    start = 0
    for lam in _LAM_GRID:
        xi2_vals = _XI_GRID if lam == 0.0 else _XI_GRID[1:]
        count = 0
        for xi1, xi2, rl, rb, rs in product(_XI_GRID, xi2_vals, RATE_GRID,
                                            RATE_GRID, rs_vals):
            cols[0].append(xi1)
            cols[1].append(xi2)
            cols[2].append(lam)
            cols[3].append(rl)
            cols[4].append(rb)
            cols[5].append(rs)
            count += 1
        blocks.append((lam, start, start + count))
        start += count
    arrays = [np.asarray(c, dtype=float) for c in cols]
    return arrays, blocks


def _lgt_power(lc, lam_blocks, out):
    # nonneg-level^lambda per block, sqrt chains for the quarter exponents
    for lam, lo, hi in lam_blocks:
        seg = lc[lo:hi]
        if lam == 0.0:
            out[lo:hi] = 1.0
        elif lam == 0.25:
            out[lo:hi] = np.sqrt(np.sqrt(seg))
        elif lam == 0.5:
            out[lo:hi] = np.sqrt(seg)
        elif lam == 0.75:
            r = np.sqrt(seg)
            out[lo:hi] = r * np.sqrt(r)
        else:
            out[lo:hi] = seg
    return out


def _lgt_sse(y, m, seasonal, l0, b0, s_init, params, blocks):
    # buffer-reusing recursion: the lattice is ~1e5 combos wide, so the
    # loop body must not allocate and the seasonal state is kept (m, N)
    # for contiguous per-phase rows
    xi1, xi2, _, rl, rb, rs = params
    N = len(xi1)
    om_rl = 1.0 - rl
    om_rb = 1.0 - rb
    om_rs = 1.0 - rs
    level = np.full(N, float(l0))
    trend = np.full(N, float(b0))
    seas = (np.repeat(np.asarray(s_init, dtype=float)[:, None], N, axis=1)
            if seasonal else None)
    sse = np.zeros(N)
    power = np.empty(N)
    mu = np.empty(N)
    tmp = np.empty(N)
    err = np.empty(N)
    new_level = np.empty(N)
    clipped = np.empty(N)
    for t in range(1, len(y)):
        yt = y[t]
        np.maximum(level, 0.0, out=clipped)
        _lgt_power(clipped, blocks, power)
        power *= xi2
        np.multiply(xi1, trend, out=mu)
        mu += level
        mu += power
        if seasonal:
            scol = seas[t % m]
            np.add(mu, scol, out=err)
            np.subtract(yt, err, out=err)
            np.subtract(yt, scol, out=new_level)
            new_level *= rl
            np.multiply(om_rl, mu, out=tmp)
            new_level += tmp
            scol *= om_rs
            np.subtract(yt, new_level, out=tmp)
            tmp *= rs
            scol += tmp
        else:
            np.subtract(yt, mu, out=err)
            np.multiply(om_rl, mu, out=new_level)
            np.multiply(rl, yt, out=tmp)
            new_level += tmp
        np.multiply(err, err, out=tmp)
        sse += tmp
        np.subtract(new_level, level, out=tmp)
        tmp *= rb
        trend *= om_rb
        trend += tmp
        level, new_level = new_level, level
    return sse, level, trend, (seas.T if seasonal else None)


def _lgt_init(y, m):
    n = len(y)
    seasonal = m > 1 and n >= 2 * m + 2
    if seasonal:
        _, s_init, _ = classical_decompose(y, m)
        adjusted = y - s_init[np.arange(n) % m]
    else:
        s_init = np.zeros(1)
        adjusted = y
    a, b = ols_line(adjusted)
    return seasonal, s_init, a + b, b


def lgt_fit(train, m):
    """Exhaustive lattice search over (xi1, xi2, lambda, rates) by
    in-sample one-step SSE. Ties go to the first lattice point."""
    y = np.asarray(train, dtype=float)
    if len(y) < 3:
        raise FitFailure("need three points")
    seasonal, s_init, l0, b0 = _lgt_init(y, m)
    params, blocks = _lgt_combos(seasonal)
    sse, level, trend, seas = _lgt_sse(y, m, seasonal, l0, b0, s_init,
                                       params, blocks)
    if not np.all(np.isfinite(sse)):
        finite = np.where(np.isfinite(sse), sse, np.inf)
        if not np.isfinite(finite).any():
            raise FitFailure("lattice search diverged everywhere")
        i = int(np.argmin(finite))
    else:
        i = int(np.argmin(sse))
    xi1, xi2, lam, rl, rb, rs = (float(params[j][i]) for j in range(6))
    final_seas = seas[i].copy() if seasonal else np.zeros(1)
    return LgtParams(level=float(level[i]), trend=float(trend[i]), xi1=xi1,
                     xi2=xi2, lam=lam, seasonal=final_seas, rate_level=rl,
                     rate_trend=rb, rate_seasonal=rs, sse=float(sse[i]))


def lgt_path(train, m, h, xi1, xi2, lam, rate_level, rate_trend,
             rate_seasonal=0.0, l0=None, b0=None, s_init=None):
    """Run the recursion for one explicit parameter point; returns
    (forecast, sse). Exposed so degenerate configurations can be checked
    against their closed-form equivalents."""
    y = np.asarray(train, dtype=float)
    n = len(y)
    seasonal = m > 1 and s_init is not None
    if not seasonal:
        s_init_arr = np.zeros(1)
    else:
        s_init_arr = np.asarray(s_init, dtype=float)
    if l0 is None or b0 is None:
        auto_seasonal, auto_s, auto_l0, auto_b0 = _lgt_init(y, m)
        if s_init is None and auto_seasonal:
            seasonal = True
            s_init_arr = auto_s
        l0 = auto_l0 if l0 is None else l0
        b0 = auto_b0 if b0 is None else b0
    params = tuple(np.array([v]) for v in
                   (xi1, xi2, lam, rate_level, rate_trend, rate_seasonal))
    blocks = [(lam, 0, 1)]
    sse, level, trend, seas = _lgt_sse(y, m, seasonal, l0, b0, s_init_arr,
                                       params, blocks)
    fc = _lgt_extrapolate(float(level[0]), float(trend[0]),
                          seas[0] if seasonal else np.zeros(1),
                          seasonal, xi1, xi2, lam, n, m, h)
    return fc, float(sse[0])


def _lgt_extrapolate(level, trend, seas, seasonal, xi1, xi2, lam, n, m, h):
    out = np.empty(h)
    cur = level
    for k in range(1, h + 1):
        g = max(cur, 0.0) ** lam
        mu = cur + xi1 * trend + xi2 * g
        out[k - 1] = mu + (seas[(n - 1 + k) % m] if seasonal else 0.0)
        cur = mu
    return out


def lgt_forecast(train, m, h):
    y = np.asarray(train, dtype=float)
    p = lgt_fit(y, m)
    seasonal = len(p.seasonal) == m and m > 1
    return _lgt_extrapolate(p.level, p.trend, p.seasonal, seasonal,
                            p.xi1, p.xi2, p.lam, len(y), m, h)


# --------------------------------------------------------- quantile trends

def quantile_fit(train, tau, fit_slope=True, max_iter=200):
    """Pinball-loss line fit by IRLS plus a coordinate-descent polish.

    With fit_slope False the slope is pinned at 0 and the exact
    order-statistic quantile is returned.
    """
    y = np.asarray(train, dtype=float)
    n = len(y)
    if n < 2:
        raise FitFailure("need two points")
    if not 0.0 < tau < 1.0:
        raise FitFailure("tau must be inside (0, 1)")
    if not fit_slope:
        return float(np.quantile(y, tau, method="inverted_cdf")), 0.0
    t = np.arange(1.0, n + 1.0)
    a, b = ols_line(y)
    r = y - a - b * t
    scale = float(np.abs(r).mean())
    if scale == 0.0:
        return a, b  # exact fit minimises pinball loss outright
    delta = 1e-6 * scale
    converged = False
    for _ in range(max_iter):
        r = y - a - b * t
        w = np.where(r > 0.0, tau, 1.0 - tau) / np.maximum(np.abs(r), delta)
        s0 = float(w.sum())
        s1 = float(w @ t)
        s2 = float(w @ (t * t))
        sy = float(w @ y)
        sty = float(w @ (t * y))
        det = s0 * s2 - s1 * s1
        if not np.isfinite(det) or det <= 0.0:
            raise FitFailure("singular weighted design")
        a_new = (s2 * sy - s1 * sty) / det
        b_new = (s0 * sty - s1 * sy) / det
        move = abs(a_new - a) + abs(b_new - b) * t.mean()
        a, b = a_new, b_new
        if move < 1e-10 * scale:
            converged = True
            break
    if not converged:
        raise FitFailure("no convergence in 200 iterations")

    def pinball(aa, bb):
        res = y - aa - bb * t
        return float(np.sum(np.where(res >= 0.0, tau * res, (tau - 1.0) * res)))

    tspan = max(float(t.std()), 1.0)
    step = 0.5 * scale
    best = pinball(a, b)
    for _ in range(200):
        cands = ((a + step, b), (a - step, b),
                 (a, b + step / tspan), (a, b - step / tspan))
        vals = [pinball(*c) for c in cands]
        j = int(np.argmin(vals))
        if vals[j] < best:
            a, b = cands[j]
            best = vals[j]
        else:
            step *= 0.5
            if step < 1e-13 * scale:
                break
    return float(a), float(b)


def quantile_trend_forecast(train, h, tau):
    y = np.asarray(train, dtype=float)
    a, b = quantile_fit(y, tau)
    n = len(y)
    return a + b * (n + np.arange(1.0, h + 1.0))


# ------------------------------------------------------------ the dispatcher

def fit_forecast(model, train, m, h):
    """Fit one model and forecast h steps; returns (forecast, fallback).

    The fallback contract: any exception or non-finite output yields the
    naive forecast with the flag set.
    """
    y = np.asarray(train, dtype=float)
    try:
        if model is ModelId.NAIVE:
            fc = naive_forecast(y, h)
        elif model is ModelId.SEASONAL_NAIVE:
            fc = seasonal_naive_forecast(y, m, h)
        elif model is ModelId.RW_DRIFT:
            fc = drift_forecast(y, h)
        elif model is ModelId.THETA:
            fc = theta_forecast(y, h)
        elif model is ModelId.SES:
            fc = ses_forecast(y, h)
        elif model is ModelId.HOLT:
            fc = holt_forecast(y, h)
        elif model is ModelId.HOLT_WINTERS:
            fc = holt_winters_forecast(y, m, h)
        elif model is ModelId.AR_AIC:
            fc = ar_aic_forecast(y, h)
        elif model is ModelId.DECOMPOSE_AR:
            fc = decompose_ar_forecast(y, m, h)
        elif model is ModelId.OLS_TREND:
            fc = ols_trend_forecast(y, h)
        elif model is ModelId.ORNSTEIN_UHLENBECK:
            fc = ou_forecast(y, h)
        elif model is ModelId.LGT_POINT:
            fc = lgt_forecast(y, m, h)
        elif model is ModelId.QUANTILE_99:
            fc = quantile_trend_forecast(y, h, 0.99)
        elif model is ModelId.QUANTILE_01:
            fc = quantile_trend_forecast(y, h, 0.01)
        else:
            raise FitFailure(f"unknown model {model}")
        fc = np.asarray(fc, dtype=float)
        if fc.shape != (h,) or not np.all(np.isfinite(fc)):
            raise FitFailure("bad forecast output")
        return fc, False
    except Exception:
        return naive_forecast(y, h), True


def forecast_all(train, m, h, series_id=""):
    """All 14 models in canonical order; per-model fallback flags."""
    b = np.empty((len(MODEL_ORDER), h))
    flags = np.zeros(len(MODEL_ORDER), dtype=bool)
    for i, model in enumerate(MODEL_ORDER):
        b[i], flags[i] = fit_forecast(model, train, m, h)
    return ForecastMatrix(series_id=series_id, b=b, fallback_flags=flags)
