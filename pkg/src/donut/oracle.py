"""Ex-post oracle: the best convex combination of a forecast pool in total
absolute deviation, found by linear programming.

For a pool matrix B (k models x h steps) and actuals y the LP is

    min sum_t (zp_t + zm_t)
    s.t. sum_i x_i B[i, t] + zp_t - zm_t = y_t   for every t
         sum_i x_i = 1,  x >= 0, zp >= 0, zm >= 0

solved with a dense two-phase simplex under Bland's rule. Instances are
tiny (tens of rows), so the tableau is kept explicit. The solver also
runs in exact rational arithmetic for order comparisons that must not be
disturbed by rounding.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np


class SimplexError(Exception):
    pass


class NegativePLoss(Exception):
    def __init__(self, value):
        super().__init__(f"model loss below the pool optimum by {-value:g}, "
                         "decomposition is inconsistent")
        self.value = value


@dataclass
class OracleSolution:
    x: np.ndarray
    objective: float
    e_loss_mase: float
    active_count: int
    z_plus: np.ndarray
    z_minus: np.ndarray
    iterations: int
    objective_exact: object = None  # Fraction when solved exactly


@dataclass(frozen=True)
class LossDecomposition:
    total_loss: float
    p_loss: float
    e_loss: float


_FLOAT_TOL = 1e-9


def _pivot_rules_float(A, b, c):
    """Two-phase simplex on min c.v, A v = b, v >= 0. Returns (v, obj, iters)."""
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    c = np.array(c, dtype=float)
    m, n = A.shape
    neg = b < 0
    A[neg] *= -1.0
    b[neg] *= -1.0

    # tableau with artificial columns appended
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = b
    basis = list(range(n, n + m))
    T[m, :n] = -A.sum(axis=0)
    T[m, -1] = -b.sum()

    iters = 0
    max_iter = 1000 + 50 * (m + n)

    def pivot(row, col):
        piv = T[row, col]
        T[row] /= piv
        for r in range(m + 1):
            if r != row and T[r, col] != 0.0:
                T[r] -= T[r, col] * T[row]
        basis[row] = col

    def run(allowed_cols):
        nonlocal iters
        while True:
            col = -1
            for j in allowed_cols:
                if T[m, j] < -_FLOAT_TOL:
                    col = j
                    break
            if col < 0:
                return
            row = -1
            best_ratio = np.inf
            for i in range(m):
                a = T[i, col]
                if a > _FLOAT_TOL:
                    ratio = T[i, -1] / a
                    if (ratio < best_ratio - _FLOAT_TOL
                            or (abs(ratio - best_ratio) <= _FLOAT_TOL
                                and (row < 0 or basis[i] < basis[row]))):
                        best_ratio = ratio
                        row = i
            if row < 0:
                raise SimplexError("unbounded objective")
            pivot(row, col)
            iters += 1
            if iters > max_iter:
                raise SimplexError("pivot limit exceeded")

    run(range(n + m))
    if -T[m, -1] > 1e-7:
        raise SimplexError("infeasible constraints")

    # drive leftover artificials out of the basis, dropping dependent rows
    drop = []
    for i in range(m):
        if basis[i] >= n:
            piv_col = -1
            for j in range(n):
                if abs(T[i, j]) > _FLOAT_TOL:
                    piv_col = j
                    break
            if piv_col >= 0:
                pivot(i, piv_col)
            else:
                drop.append(i)
    if drop:
        keep = [i for i in range(m) if i not in drop]
        T = np.vstack([T[keep, :], T[m:m + 1, :]])
        basis = [basis[i] for i in keep]
        m = len(keep)

    # phase 2 objective row for the structural columns
    T[m, :] = 0.0
    T[m, :n] = c
    for i in range(m):
        cb = c[basis[i]] if basis[i] < n else 0.0
        if cb != 0.0:
            T[m, :] -= cb * T[i, :]
    run(range(n))

    v = np.zeros(n)
    for i in range(m):
        if basis[i] < n:
            v[basis[i]] = T[i, -1]
    return v, float(-T[m, -1]), iters


def _pivot_rules_exact(A, b, c):
    """Same algorithm in Fraction arithmetic; all comparisons are exact."""
    m = len(A)
    n = len(A[0])
    A = [[Fraction(x) for x in row] for row in A]
    b = [Fraction(x) for x in b]
    c = [Fraction(x) for x in c]
    zero = Fraction(0)
    for i in range(m):
        if b[i] < zero:
            A[i] = [-x for x in A[i]]
            b[i] = -b[i]

    width = n + m + 1
    T = []
    for i in range(m):
        row = A[i] + [zero] * m + [b[i]]
        row[n + i] = Fraction(1)
        T.append(row)
    obj = [-sum(A[i][j] for i in range(m)) for j in range(n)]
    obj += [zero] * m + [-sum(b)]
    T.append(obj)
    basis = list(range(n, n + m))

    iters = 0
    max_iter = 1000 + 50 * (m + n)

    def pivot(row, col):
        piv = T[row][col]
        T[row] = [x / piv for x in T[row]]
        prow = T[row]
        for r in range(len(T)):
            if r != row:
                f = T[r][col]
                if f != zero:
                    T[r] = [a - f * p for a, p in zip(T[r], prow)]
        basis[row] = col

    def run(ncols):
        nonlocal iters
        while True:
            col = -1
            zrow = T[-1]
            for j in range(ncols):
                if zrow[j] < zero:
                    col = j
                    break
            if col < 0:
                return
            row = -1
            best = None
            for i in range(len(basis)):
                a = T[i][col]
                if a > zero:
                    ratio = T[i][-1] / a
                    if best is None or ratio < best or (ratio == best
                                                        and basis[i] < basis[row]):
                        best = ratio
                        row = i
            if row < 0:
                raise SimplexError("unbounded objective")
            pivot(row, col)
            iters += 1
            if iters > max_iter:
                raise SimplexError("pivot limit exceeded")

    run(n + m)
    if -T[-1][-1] > zero:
        raise SimplexError("infeasible constraints")

    drop = []
    for i in range(len(basis)):
        if basis[i] >= n:
            piv_col = -1
            for j in range(n):
                if T[i][j] != zero:
                    piv_col = j
                    break
            if piv_col >= 0:
                pivot(i, piv_col)
            else:
                drop.append(i)
    if drop:
        T = [T[i] for i in range(len(basis)) if i not in drop] + [T[-1]]
        basis = [basis[i] for i in range(len(basis)) if i not in drop]

    zrow = [zero] * width
    for j in range(n):
        zrow[j] = c[j]
    T[-1] = zrow
    for i in range(len(basis)):
        cb = c[basis[i]] if basis[i] < n else zero
        if cb != zero:
            T[-1] = [a - cb * p for a, p in zip(T[-1], T[i])]
    run(n)

    v = [zero] * n
    for i in range(len(basis)):
        if basis[i] < n:
            v[basis[i]] = T[i][-1]
    return v, -T[-1][-1], iters


def _combination_lp(B, y, exact):
    B = np.asarray(B, dtype=float)
    y = np.asarray(y, dtype=float)
    k, h = B.shape
    n = k + 2 * h
    A = np.zeros((h + 1, n))
    A[:h, :k] = B.T
    A[:h, k:k + h] = np.eye(h)
    A[:h, k + h:] = -np.eye(h)
    A[h, :k] = 1.0
    rhs = np.concatenate([y, [1.0]])
    cost = np.concatenate([np.zeros(k), np.ones(2 * h)])
    if exact:
        v, obj, iters = _pivot_rules_exact(A.tolist(), rhs.tolist(), cost.tolist())
        vf = np.array([float(x) for x in v])
        return vf, float(obj), iters, obj, v
    v, obj, iters = _pivot_rules_float(A, rhs, cost)
    return v, obj, iters, None, None


def optimal_weights(forecasts, actual, mase_denom=1.0, exact=False):
    """LP-optimal convex weights for a forecast pool against the actuals.

    forecasts is (k, h), actual is (h,). The returned weights are clipped
    at zero and renormalised so the simplex constraints hold exactly at
    the vertex the solver lands on; e_loss_mase = objective / (h * D).
    """
    B = np.asarray(forecasts, dtype=float)
    y = np.asarray(actual, dtype=float)
    if B.ndim != 2 or y.ndim != 1 or B.shape[1] != len(y):
        raise ValueError("forecast matrix and actuals do not align")
    k, h = B.shape
    v, obj, iters, obj_exact, v_exact = _combination_lp(B, y, exact)
    x = np.maximum(v[:k], 0.0)
    s = x.sum()
    if s <= 0.0:
        raise SimplexError("degenerate weight vector")
    x = x / s
    zp = v[k:k + h]
    zm = v[k + h:]
    d = float(mase_denom)
    return OracleSolution(
        x=x,
        objective=obj,
        e_loss_mase=obj / (h * d) if d > 0 else np.inf,
        active_count=int(np.sum(x > 1e-6)),
        z_plus=zp,
        z_minus=zm,
        iterations=iters,
        objective_exact=obj_exact)


def pool_loss(forecasts, actual, weights, mase_denom=1.0):
    """Mean absolute deviation of the weighted pool, in MASE units."""
    B = np.asarray(forecasts, dtype=float)
    y = np.asarray(actual, dtype=float)
    fc = np.asarray(weights, dtype=float) @ B
    return float(np.abs(y - fc).mean() / float(mase_denom))


def optimal_selection(forecasts, actual, mase_denom=1.0):
    """Best single pool member: (index, loss in MASE units)."""
    B = np.asarray(forecasts, dtype=float)
    y = np.asarray(actual, dtype=float)
    losses = np.abs(B - y[None, :]).mean(axis=1) / float(mase_denom)
    best = int(np.argmin(losses))
    return best, float(losses[best])


def decompose_loss(model_forecast, forecasts, actual, mase_denom=1.0):
    """Split a model's loss into ensembling loss (the pool optimum) and
    prediction loss (the distance from that optimum).

    total = p_loss + e_loss holds exactly; p_loss is clamped at zero and
    a violation beyond tolerance raises NegativePLoss.
    """
    y = np.asarray(actual, dtype=float)
    f = np.asarray(model_forecast, dtype=float)
    d = float(mase_denom)
    total_raw = float(np.abs(y - f).mean() / d)
    sol = optimal_weights(forecasts, y, mase_denom=d)
    e_loss = sol.e_loss_mase
    p_raw = total_raw - e_loss
    if p_raw < -1e-6:
        raise NegativePLoss(p_raw)
    p_loss = max(p_raw, 0.0)
    return LossDecomposition(total_loss=p_loss + e_loss, p_loss=p_loss, e_loss=e_loss)


def greedy_pool(instances, n_candidates=None, max_size=None, exact_curve=False):
    """Grow a pool one model at a time, always adding the candidate that
    minimises the corpus mean LP-optimal loss.

    instances is a list of (forecasts, actual, mase_denom) triples sharing
    the candidate axis. Returns (order, curve) where curve[j] is the mean
    loss of the pool of size j + 1. Ties go to the lowest model index.

    With exact_curve the recorded curve values are recomputed in rational
    arithmetic for the chosen pools, so the guaranteed weak monotonicity
    of nested pool optima is not blurred by float rounding. Candidate
    selection itself stays in float.
    """
    if not instances:
        raise ValueError("need at least one instance")
    k = np.asarray(instances[0][0]).shape[0]
    if n_candidates is None:
        n_candidates = k
    if max_size is None:
        max_size = n_candidates
    chosen = []
    curve = []
    remaining = list(range(n_candidates))
    while remaining and len(chosen) < max_size:
        best_c = None
        best_mean = np.inf
        for c in remaining:
            pool = chosen + [c]
            total = 0.0
            for B, y, d in instances:
                sub = np.asarray(B, dtype=float)[pool, :]
                total += optimal_weights(sub, y, mase_denom=d).e_loss_mase
            mean_loss = total / len(instances)
            if mean_loss < best_mean:
                best_mean = mean_loss
                best_c = c
        chosen.append(best_c)
        remaining.remove(best_c)
        if exact_curve:
            total = Fraction(0)
            for B, y, d in instances:
                sub = np.asarray(B, dtype=float)[chosen, :]
                sol = optimal_weights(sub, y, mase_denom=d, exact=True)
                h = sub.shape[1]
                total += sol.objective_exact / (h * Fraction(float(d)))
            curve.append(float(total / len(instances)))
        else:
            curve.append(best_mean)
    return chosen, curve
