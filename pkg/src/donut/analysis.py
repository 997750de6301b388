"""Post-hoc analysis: permutation importance with t-ratio tests, Ward
correlation clustering of features, and OWA breakdown tables."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .corpus import PeriodName, SeriesType
from .weight_net import FEATURE_COLUMN_NAMES, corpus_owa


class SingleSeriesCorpus(Exception):
    pass


class UnpairedSeries(Exception):
    pass


@dataclass(frozen=True)
class ImportanceRecord:
    feature: str
    importance: float        # mean OWA(permuted) - OWA(baseline)
    t_stat: float
    p_value: float           # one-sided, H1: permuting hurts
    repeats: int


def _column_indices(features):
    if isinstance(features, (str, int)):
        features = [features]
    out = []
    for f in features:
        if isinstance(f, str):
            out.append(FEATURE_COLUMN_NAMES.index(f))
        else:
            out.append(int(f))
    return out


def _t_summary(deltas):
    deltas = np.asarray(deltas, dtype=float)
    r = deltas.size
    mean = float(deltas.mean())
    sd = float(deltas.std(ddof=1))
    if sd == 0.0:
        t = 0.0 if mean == 0.0 else float(np.sign(mean) * np.inf)
    else:
        t = mean / (sd / np.sqrt(r))
    p = float(stats.t.sf(t, r - 1))
    return mean, t, max(p, np.finfo(float).tiny)


def permutation_importance(net, X, rows, features, seed, repeats=5,
                           label=None, permutations=None):
    """Importance of one feature (or a joint set) for a trained net.

    X is the standardized (n, 76) table aligned with rows. Each repeat
    draws one permutation and applies it to every listed column, so a
    joint set is scrambled as a block and its internal correlations
    survive. Standardization commutes with permutation, so scrambling
    the standardized table is exact.
    """
    if len(rows) < 2:
        raise SingleSeriesCorpus("importance needs at least two series")
    cols = _column_indices(features)
    baseline = corpus_owa(net, X, rows)
    rng = np.random.default_rng(seed)
    deltas = []
    for r in range(repeats):
        if permutations is not None:
            perm = np.asarray(permutations[r])  # explicit, e.g. identity
        else:
            perm = rng.permutation(X.shape[0])
        Xp = X.copy()
        for c in cols:
            Xp[:, c] = X[perm, c]
        deltas.append(corpus_owa(net, Xp, rows) - baseline)
    mean, t, p = _t_summary(deltas)
    if label is None:
        label = (FEATURE_COLUMN_NAMES[cols[0]] if len(cols) == 1
                 else "+".join(FEATURE_COLUMN_NAMES[c] for c in cols))
    return ImportanceRecord(label, mean, t, p, repeats)


def importance_table(net, X, rows, seed, repeats=5):
    """ImportanceRecord per input column, with derived per-column seeds."""
    seq = np.random.SeedSequence(seed)
    children = seq.spawn(X.shape[1])
    return [permutation_importance(net, X, rows, [c], children[c],
                                   repeats=repeats)
            for c in range(X.shape[1])]


@dataclass(frozen=True)
class Dendrogram:
    merges: tuple              # (a, b, height, size) with scipy-style ids
    leaf_order: tuple
    n_leaves: int


def correlation_distance(X):
    """d_ij = sqrt(2 (1 - rho_ij)); zero-variance columns correlate 0
    with everything by convention (and 1 with themselves)."""
    X = np.asarray(X, dtype=float)
    n = X.shape[1]
    sd = X.std(axis=0)
    ok = sd > 0.0
    Z = np.zeros_like(X)
    Z[:, ok] = (X[:, ok] - X[:, ok].mean(axis=0)) / sd[ok]
    rho = Z.T @ Z / X.shape[0]
    rho[~ok, :] = 0.0
    rho[:, ~ok] = 0.0
    np.fill_diagonal(rho, 1.0)
    rho = np.clip(rho, -1.0, 1.0)
    d = np.sqrt(np.maximum(2.0 * (1.0 - rho), 0.0))
    np.fill_diagonal(d, 0.0)
    return d


def cluster_features(X):
    """Ward-linkage dendrogram over feature columns via the
    Lance-Williams update on the correlation distance."""
    d = correlation_distance(X)
    n = d.shape[0]
    if n < 2:
        raise ValueError("need at least two features")
    d2 = d.astype(float) ** 2                     # squared-distance updates
    active = {}
    for i in range(n):
        active[i] = {"size": 1, "leaves": [i]}
    dist2 = {}
    ids = sorted(active)
    for ai in range(len(ids)):
        for bi in range(ai + 1, len(ids)):
            dist2[(ids[ai], ids[bi])] = d2[ids[ai], ids[bi]]

    def key(a, b):
        return (a, b) if a < b else (b, a)

    merges = []
    next_id = n
    while len(active) > 1:
        ids = sorted(active)
        best = None
        for ai in range(len(ids)):
            for bi in range(ai + 1, len(ids)):
                v = dist2[key(ids[ai], ids[bi])]
                if best is None or v < best[0] - 1e-15:
                    best = (v, ids[ai], ids[bi])
        v, a, b = best
        height = float(np.sqrt(max(v, 0.0)))
        na, nb = active[a]["size"], active[b]["size"]
        la, lb = active[a]["leaves"], active[b]["leaves"]
        leaves = la + lb if min(la) < min(lb) else lb + la
        for k in active:
            if k in (a, b):
                continue
            nk = active[k]["size"]
            dk = ((na + nk) * dist2[key(a, k)] + (nb + nk) * dist2[key(b, k)]
                  - nk * dist2[key(a, b)]) / (na + nb + nk)
            dist2[key(next_id, k)] = dk
        del active[a], active[b]
        active[next_id] = {"size": na + nb, "leaves": leaves}
        merges.append((a, b, height, na + nb))
        next_id += 1
    leaf_order = tuple(active[next_id - 1]["leaves"])
    return Dendrogram(tuple(merges), leaf_order, n)


def cut_clusters(dendrogram, k):
    """Labels 0..k-1 per leaf after undoing the last k-1 merges; clusters
    are numbered by their smallest leaf index."""
    n = dendrogram.n_leaves
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}]")
    parent = {i: {i} for i in range(n)}
    for step, (a, b, _, _) in enumerate(dendrogram.merges[:n - k]):
        parent[n + step] = parent.pop(a) | parent.pop(b)
    groups = sorted((sorted(v) for v in parent.values()), key=lambda g: g[0])
    labels = np.empty(n, dtype=int)
    for lab, g in enumerate(groups):
        labels[g] = lab
    return labels


def cluster_importance(net, X, rows, labels, seed, repeats=5):
    """Joint permutation importance per cluster of features."""
    labels = np.asarray(labels)
    seq = np.random.SeedSequence(seed)
    children = seq.spawn(int(labels.max()) + 1)
    records = []
    for lab in range(int(labels.max()) + 1):
        cols = np.flatnonzero(labels == lab)
        records.append(permutation_importance(
            net, X, rows, cols, children[lab], repeats=repeats,
            label=f"cluster_{lab}"))
    return records


def owa_breakdown(owa_values, periods, types):
    """Per-(period, type) mean OWA with two-sided t-tests against the
    global pooled mean. Returns {"cells": {(period, type): record},
    "row_means", "col_means", "global_mean"}."""
    owa_values = np.asarray(owa_values, dtype=float)
    periods = [PeriodName(p) for p in periods]
    types = [SeriesType(t) for t in types]
    global_mean = float(owa_values.mean())
    cells = {}
    for p in PeriodName:
        for t in SeriesType:
            sel = [i for i in range(len(owa_values))
                   if periods[i] == p and types[i] == t]
            if not sel:
                continue
            vals = owa_values[sel]
            mean = float(vals.mean())
            if len(sel) < 2 or vals.std(ddof=1) == 0.0:
                p_val = 1.0
            else:
                t_stat = ((mean - global_mean)
                          / (vals.std(ddof=1) / np.sqrt(len(sel))))
                p_val = float(2.0 * stats.t.sf(abs(t_stat), len(sel) - 1))
            cells[(p, t)] = {"mean": mean, "n": len(sel),
                             "p_value": min(p_val, 1.0)}
    row_means = {p: float(owa_values[[i for i in range(len(owa_values))
                                      if periods[i] == p]].mean())
                 for p in PeriodName if any(x == p for x in periods)}
    col_means = {t: float(owa_values[[i for i in range(len(owa_values))
                                      if types[i] == t]].mean())
                 for t in SeriesType if any(x == t for x in types)}
    return {"cells": cells, "row_means": row_means, "col_means": col_means,
            "global_mean": global_mean}


def _paired(owa_a, owa_b):
    if set(owa_a) != set(owa_b):
        raise UnpairedSeries("the two loss tables cover different series")
    ids = sorted(owa_a)
    diff = np.array([owa_a[i] - owa_b[i] for i in ids])
    return ids, diff


def _cell_test(diffs, alpha):
    mean = float(diffs.mean())
    if len(diffs) < 2 or diffs.std(ddof=1) == 0.0:
        p = 1.0 if mean == 0.0 else 0.0
        if len(diffs) < 2:
            p = 1.0
    else:
        t = mean / (diffs.std(ddof=1) / np.sqrt(len(diffs)))
        p = float(2.0 * stats.t.sf(abs(t), len(diffs) - 1))
    return {"mean_diff": mean, "n": len(diffs), "p_value": min(p, 1.0),
            "significant": bool(p < alpha and len(diffs) >= 2)}


def compare_buckets(owa_a, owa_b, meta=None, feature=None, n_bins=5,
                    alpha=0.01):
    """Paired mean(OWA_A - OWA_B) per bucket with t-tests.

    Bucketing is (period, type) when meta (id -> (period, type)) is
    given, or feature-quantile bins when feature (id -> value) is given.
    """
    ids, diff = _paired(owa_a, owa_b)
    table = {}
    if feature is not None:
        vals = np.array([feature[i] for i in ids], dtype=float)
        edges = np.quantile(vals, np.linspace(0, 1, n_bins + 1)[1:-1])
        bins = np.searchsorted(edges, vals, side="right")
        for b in range(n_bins):
            sel = bins == b
            if sel.any():
                table[f"bin_{b}"] = _cell_test(diff[sel], alpha)
    elif meta is not None:
        keys = [meta[i] for i in ids]
        for key in sorted(set(keys), key=str):
            sel = np.array([k == key for k in keys])
            table[key] = _cell_test(diff[sel], alpha)
    else:
        raise ValueError("need meta or feature for bucketing")
    return table
