"""The 42 statistical time series features feeding the weighting model.

Feature values are deterministic functions of (series, m). Any feature
whose definition degenerates (seasonal block when m = 1, too-short
series, fit failures) imputes 0 and sets its missing flag; flags are
kept so the standardizer can exclude imputed values from its moments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from . import model_pool
from .tsutils import acf, centered_ma, classical_decompose, pacf

FEATURE_NAMES = (
    "x_acf1", "x_acf10", "diff1_acf1", "diff1_acf10", "diff2_acf1",
    "diff2_acf10", "x_pacf5", "diff1x_pacf5", "diff2x_pacf5", "seas_acf1",
    "seas_pacf", "entropy", "lumpiness", "stability", "flat_spots",
    "cross_ps", "hurst", "unitroot_kpss", "unitroot_pp", "nonlinearity",
    "arch_acf", "garch_acf", "arch_r2", "garch_r2", "ARCH.LM", "trend",
    "spike", "linearity", "curvature", "e_acf1", "e_acf10", "seas_str",
    "peak", "trough", "hw_alpha", "hw_beta", "hw_gamma", "alpha", "beta",
    "nperiods", "seas_per", "s_len",
)

N_FEATURES = len(FEATURE_NAMES)


@dataclass
class StatFeatures:
    values: np.ndarray   # (42,) canonical order
    missing: np.ndarray  # (42,) bool, True where imputed

    def as_dict(self):
        return dict(zip(FEATURE_NAMES, self.values))

    def __getitem__(self, name):
        return float(self.values[FEATURE_NAMES.index(name)])


class _Sink:
    def __init__(self):
        self.values = np.zeros(N_FEATURES)
        self.missing = np.zeros(N_FEATURES, dtype=bool)

    def put(self, name, value):
        i = FEATURE_NAMES.index(name)
        v = float(value)
        if np.isfinite(v):
            self.values[i] = v
        else:
            self.missing[i] = True

    def impute(self, *names):
        for name in names:
            self.missing[FEATURE_NAMES.index(name)] = True


def _acf_block(sink, y, prefix_acf1, prefix_acf10, pacf_name):
    e = y - y.mean()
    if len(y) < 2 or float(e @ e) <= 0.0:
        sink.impute(prefix_acf1, prefix_acf10, pacf_name)
        return
    rho = acf(y, 10)
    sink.put(prefix_acf1, rho[1])
    sink.put(prefix_acf10, float(rho[1:11] @ rho[1:11]))
    pp = pacf(y, 5)
    sink.put(pacf_name, float(pp @ pp))


def _entropy(sink, y):
    n = len(y)
    e = y - y.mean()
    spectrum = np.abs(np.fft.rfft(e)[1:]) ** 2
    total = spectrum.sum()
    if len(spectrum) < 2 or total <= 0.0:
        sink.impute("entropy")
        return
    p = spectrum / total
    nz = p > 0.0
    h = -float(p[nz] @ np.log(p[nz]))
    sink.put("entropy", h / np.log(len(spectrum)))


def _tiles(sink, y, width=10):
    nt = len(y) // width
    if nt < 2:
        sink.impute("lumpiness", "stability")
        return
    tiles = y[:nt * width].reshape(nt, width)
    sink.put("lumpiness", float(tiles.var(axis=1, ddof=1).var(ddof=1)))
    sink.put("stability", float(tiles.mean(axis=1).var(ddof=1)))


def _flat_spots(sink, y):
    edges = np.quantile(y, np.linspace(0.0, 1.0, 11))
    bins = np.searchsorted(edges[1:-1], y, side="right")
    best = run = 1
    for i in range(1, len(bins)):
        run = run + 1 if bins[i] == bins[i - 1] else 1
        best = max(best, run)
    sink.put("flat_spots", best)


def _crossings(sink, y):
    above = y > np.median(y)
    sink.put("cross_ps", int(np.sum(above[1:] != above[:-1])))


def _hurst(sink, y):
    n = len(y)
    if n < 20:
        sink.impute("hurst")
        return
    sizes = np.unique(np.round(np.geomspace(10, n // 2, 8)).astype(int))
    logs, logrs = [], []
    for s in sizes:
        if s < 4:
            continue
        nb = n // s
        ratios = []
        for b in range(nb):
            block = y[b * s:(b + 1) * s]
            z = block - block.mean()
            w = np.cumsum(z)
            rng_w = float(w.max() - w.min())
            sd = float(block.std())
            if sd > 0.0:
                ratios.append(rng_w / sd)
        if ratios:
            mean_rs = float(np.mean(ratios))
            if mean_rs > 0.0:
                logs.append(np.log(s))
                logrs.append(np.log(mean_rs))
    if len(logs) < 2:
        sink.impute("hurst")
        return
    x = np.asarray(logs)
    z = np.asarray(logrs)
    slope = float((x - x.mean()) @ (z - z.mean())) / float((x - x.mean()) @ (x - x.mean()))
    sink.put("hurst", slope)


def _bartlett_lrv(u, bandwidth):
    n = len(u)
    lrv = float(u @ u) / n
    for j in range(1, bandwidth + 1):
        gamma = float(u[j:] @ u[:-j]) / n
        lrv += 2.0 * (1.0 - j / (bandwidth + 1.0)) * gamma
    return lrv


def _unit_roots(sink, y):
    n = len(y)
    if n < 12:
        sink.impute("unitroot_kpss", "unitroot_pp")
        return
    bw = int(np.floor(4.0 * (n / 100.0) ** 0.25))
    # KPSS level statistic
    e = y - y.mean()
    lrv = _bartlett_lrv(e, bw)
    if lrv <= 0.0:
        sink.impute("unitroot_kpss")
    else:
        s = np.cumsum(e)
        sink.put("unitroot_kpss", float(s @ s) / (n * n * lrv))
    # Phillips-Perron rho statistic on the lag-1 regression with intercept
    x = y[:-1]
    t = y[1:]
    ne = n - 1
    xbar = x.mean()
    dxx = float((x - xbar) @ (x - xbar))
    if dxx <= 0.0:
        sink.impute("unitroot_pp")
        return
    rho = float((x - xbar) @ (t - t.mean())) / dxx
    c = t.mean() - rho * xbar
    u = t - c - rho * x
    s2 = float(u @ u) / ne
    lam2 = _bartlett_lrv(u, bw)
    sink.put("unitroot_pp", ne * (rho - 1.0) - ne * ne * (lam2 - s2) / (2.0 * dxx))


def _nonlinearity(sink, y):
    n = len(y)
    sd = y.std()
    if n < 8 or sd <= 0.0:
        sink.impute("nonlinearity")
        return
    z = (y - y.mean()) / sd
    target = z[1:]
    lag = z[:-1]
    ne = len(target)
    X0 = np.column_stack([np.ones(ne), lag])
    X1 = np.column_stack([np.ones(ne), lag, lag ** 2, lag ** 3])
    c0, _, _, _ = np.linalg.lstsq(X0, target, rcond=None)
    c1, _, _, _ = np.linalg.lstsq(X1, target, rcond=None)
    sse0 = float(np.sum((target - X0 @ c0) ** 2))
    sse1 = float(np.sum((target - X1 @ c1) ** 2))
    if sse1 < 1e-10:
        sink.put("nonlinearity", 0.0)
        return
    f = ((sse0 - sse1) / 2.0) / (sse1 / (ne - 4))
    sink.put("nonlinearity", max(f, 0.0))


def _r2_on_lags(x, nlags):
    ne = len(x) - nlags
    if ne < nlags + 2:
        return None
    X = np.ones((ne, nlags + 1))
    for j in range(1, nlags + 1):
        X[:, j] = x[nlags - j:len(x) - j]
    target = x[nlags:]
    sst = float(np.sum((target - target.mean()) ** 2))
    if sst <= 0.0:
        return None
    coef, _, _, _ = np.linalg.lstsq(X, target, rcond=None)
    sse = float(np.sum((target - X @ coef) ** 2))
    return max(0.0, 1.0 - sse / sst), ne


def _garch_filter(r2, omega, alpha, beta, s0):
    # sigma2_t = omega + alpha * r2_{t-1} + beta * sigma2_{t-1}
    drive = omega + alpha * r2[:-1]
    zi = lfilter([1.0], [1.0, -beta], [0.0], zi=[beta * s0])[1]
    sig, _ = lfilter([1.0], [1.0, -beta], drive, zi=zi)
    return sig


def _fit_garch(r, iters=200, lr=0.02):
    """Gaussian quasi-likelihood GARCH(1,1) by projected gradient ascent.

    r is already standardized. Returns (omega, alpha, beta) or None.
    """
    r2 = r * r
    s0 = 1.0
    theta = np.array([0.1, 0.1, 0.8])

    def project(th):
        th[0] = max(th[0], 1e-8)
        th[1] = max(th[1], 0.0)
        th[2] = max(th[2], 0.0)
        s = th[1] + th[2]
        if s >= 0.999:
            th[1] *= 0.999 / s
            th[2] *= 0.999 / s
        return th

    def nll_grad(th):
        omega, alpha, beta = th
        sig = _garch_filter(r2, omega, alpha, beta, s0)
        if np.any(sig <= 0.0) or not np.all(np.isfinite(sig)):
            return None
        tail = r2[1:]
        nll = 0.5 * float(np.sum(np.log(sig) + tail / sig))
        dldx = 0.5 * (1.0 / sig - tail / sig ** 2)
        ones = np.ones_like(sig)
        dso = lfilter([1.0], [1.0, -beta], ones)
        dsa = lfilter([1.0], [1.0, -beta], r2[:-1])
        prev = np.concatenate([[s0], sig[:-1]])
        dsb = lfilter([1.0], [1.0, -beta], prev)
        grad = np.array([float(dldx @ dso), float(dldx @ dsa), float(dldx @ dsb)])
        return nll, grad

    cur = nll_grad(theta)
    if cur is None or not np.isfinite(cur[0]):
        return None
    # monotone backtracking keeps the iterates convergent, so the fitted
    # point is stable under last-bit input perturbations (affine suite)
    for _ in range(iters):
        nll, grad = cur
        norm = float(np.linalg.norm(grad))
        if norm > 1.0:
            grad = grad / norm
        step = lr
        improved = False
        for _ in range(30):
            cand = project(theta - step * grad)
            res = nll_grad(cand)
            if res is not None and res[0] <= nll:
                theta = cand
                cur = res
                improved = True
                break
            step *= 0.5
        if not improved:
            break
    return tuple(theta)


def _heterogeneity(sink, y, m):
    arch_names = ("arch_acf", "arch_r2", "ARCH.LM")
    garch_names = ("garch_acf", "garch_r2")
    try:
        r = model_pool.ar_residuals(y)
    except Exception:
        sink.impute(*arch_names, *garch_names)
        return
    sd = r.std()
    if len(r) < 25 or sd <= 0.0:
        sink.impute(*arch_names, *garch_names)
        return
    r = r / sd
    x = r * r
    rho = acf(x, 12)
    sink.put("arch_acf", float(rho[1:13] @ rho[1:13]))
    fit = _r2_on_lags(x, 12)
    if fit is None:
        sink.impute("arch_r2", "ARCH.LM")
    else:
        r2v, ne = fit
        sink.put("arch_r2", r2v)
        sink.put("ARCH.LM", ne * r2v)
    params = _fit_garch(r)
    if params is None:
        sink.impute(*garch_names)
        return
    omega, alpha, beta = params
    sig = _garch_filter(x, omega, alpha, beta, 1.0)
    if np.any(sig <= 0.0):
        sink.impute(*garch_names)
        return
    e = r[1:] / np.sqrt(sig)
    e2 = e * e
    rho_g = acf(e2, 12)
    sink.put("garch_acf", float(rho_g[1:13] @ rho_g[1:13]))
    fit_g = _r2_on_lags(e2, 12)
    if fit_g is None:
        sink.impute("garch_r2")
    else:
        sink.put("garch_r2", fit_g[0])


def _orthogonal_poly_coefs(series):
    n = len(series)
    t = np.arange(1.0, n + 1.0)
    V = np.column_stack([np.ones(n), t, t * t])
    q, _ = np.linalg.qr(V)
    # fix signs: linear column increasing, quadratic column convex
    if q[-1, 1] < q[0, 1]:
        q[:, 1] *= -1.0
    if q[0, 2] < 0.0:
        q[:, 2] *= -1.0
    coefs = q.T @ series
    return float(coefs[1]), float(coefs[2])


def _decomposition(sink, y, m):
    names = ("trend", "spike", "linearity", "curvature", "e_acf1", "e_acf10",
             "seas_str", "peak", "trough")
    n = len(y)
    window = m if m > 1 else 11
    if n < window + 2 or (m > 1 and n < 2 * m):
        sink.impute(*names)
        return
    if m > 1:
        trend_c, seasonal, _ = classical_decompose(y, m)
    else:
        trend_c = centered_ma(y, window)
        seasonal = np.zeros(1)
    ok = np.isfinite(trend_c)
    if ok.sum() < 8:
        sink.impute(*names)
        return
    phases = np.arange(n) % m if m > 1 else np.zeros(n, dtype=int)
    e = (y - trend_c - seasonal[phases])[ok]
    t_int = trend_c[ok]
    var_e = float(e.var())
    var_te = float((t_int + e).var())
    sink.put("trend", max(0.0, 1.0 - var_e / var_te) if var_te > 0.0 else 0.0)
    if m > 1:
        var_se = float((y - trend_c)[ok].var())
        sink.put("seas_str",
                 max(0.0, 1.0 - var_e / var_se) if var_se > 0.0 else 0.0)
        sink.put("peak", int(np.argmax(seasonal)) + 1)
        sink.put("trough", int(np.argmin(seasonal)) + 1)
    else:
        sink.impute("seas_str", "peak", "trough")
    # leave-one-out variance of the remainder
    ne = len(e)
    s1 = e.sum()
    s2 = float(e @ e)
    mean_i = (s1 - e) / (ne - 1)
    var_i = (s2 - e * e) / (ne - 1) - mean_i ** 2
    sink.put("spike", float(var_i.var()))
    lin, curv = _orthogonal_poly_coefs(t_int)
    sink.put("linearity", lin)
    sink.put("curvature", curv)
    if float((e - e.mean()) @ (e - e.mean())) > 0.0:
        rho_e = acf(e, 10)
        sink.put("e_acf1", rho_e[1])
        sink.put("e_acf10", float(rho_e[1:11] @ rho_e[1:11]))
    else:
        sink.impute("e_acf1", "e_acf10")


def _smoothing_params(sink, y, m):
    try:
        alpha, beta, *_ = model_pool.holt_fit(y)
        sink.put("alpha", alpha)
        sink.put("beta", beta)
    except Exception:
        sink.impute("alpha", "beta")
    if m > 1:
        try:
            hw_a, hw_b, hw_g, *_ = model_pool.holt_winters_fit(y, m)
            sink.put("hw_alpha", hw_a)
            sink.put("hw_beta", hw_b)
            sink.put("hw_gamma", hw_g)
            return
        except Exception:
            pass
    sink.impute("hw_alpha", "hw_beta", "hw_gamma")


def extract_stat_features(train, m):
    """All 42 features for one series; deterministic in (train, m)."""
    y = np.asarray(train, dtype=float)
    n = len(y)
    sink = _Sink()

    _acf_block(sink, y, "x_acf1", "x_acf10", "x_pacf5")
    if n >= 3:
        _acf_block(sink, np.diff(y), "diff1_acf1", "diff1_acf10", "diff1x_pacf5")
    else:
        sink.impute("diff1_acf1", "diff1_acf10", "diff1x_pacf5")
    if n >= 4:
        _acf_block(sink, np.diff(y, 2), "diff2_acf1", "diff2_acf10", "diff2x_pacf5")
    else:
        sink.impute("diff2_acf1", "diff2_acf10", "diff2x_pacf5")

    if m > 1 and n > m + 1:
        rho = acf(y, m)
        if rho[0] == 0.0:
            sink.impute("seas_acf1", "seas_pacf")
        else:
            sink.put("seas_acf1", rho[m])
            sink.put("seas_pacf", pacf(y, m)[m - 1])
    else:
        sink.impute("seas_acf1", "seas_pacf")

    _entropy(sink, y)
    _tiles(sink, y)
    _flat_spots(sink, y)
    _crossings(sink, y)
    _hurst(sink, y)
    _unit_roots(sink, y)
    _nonlinearity(sink, y)
    _heterogeneity(sink, y, m)
    _decomposition(sink, y, m)
    _smoothing_params(sink, y, m)

    sink.put("nperiods", 1.0 if m > 1 else 0.0)
    sink.put("seas_per", m)
    sink.put("s_len", n)
    return StatFeatures(values=sink.values, missing=sink.missing)
