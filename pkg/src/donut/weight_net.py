"""Neural weighting of the model pool.

A 76-feature vector per series (42 statistics, 32 embedding values,
period and type ordinal codes) feeds one rectifier hidden layer with
dropout and a softmax head over the 14 pool models. Training minimizes
the mean per-series OWA of the weighted-average forecast.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict, field

import numpy as np

from .corpus import PeriodName, SeriesType, partition_indices
from .model_pool import MODEL_ORDER
from .neural import (AdamW, Dense, ShapeMismatch, dropout, layers_state,
                     load_layers_state)
from .stat_features import FEATURE_NAMES, N_FEATURES

N_EMBEDDING = 32
N_INPUT = N_FEATURES + N_EMBEDDING + 2
N_MODELS = len(MODEL_ORDER)

FEATURE_COLUMN_NAMES = (tuple(FEATURE_NAMES)
                        + tuple(f"emb_{i:02d}" for i in range(N_EMBEDDING))
                        + ("period_code", "type_code"))

_PERIOD_ORDINAL = {name: i for i, name in enumerate(PeriodName)}
_TYPE_ORDINAL = {name: i for i, name in enumerate(SeriesType)}


class MissingPart(Exception):
    def __init__(self, series_id, part):
        super().__init__(f"series {series_id!r} is missing its {part}")
        self.series_id = series_id
        self.part = part


class DivergenceDetected(Exception):
    pass


@dataclass
class WeightNetConfig:
    hidden_dim: int = 1024
    epochs: int = 12
    batch_size: int = 4096
    lr: float = 0.002
    dropout: float = 0.258
    weight_decay: float = 0.003064


def desk_weightnet_config(**overrides):
    base = dict(hidden_dim=128, batch_size=512)
    base.update(overrides)
    return WeightNetConfig(**base)


def period_code(period_name):
    return _PERIOD_ORDINAL[PeriodName(period_name)]


def type_code(series_type):
    return _TYPE_ORDINAL[SeriesType(series_type)]


def raw_feature_vector(stat, embedding, period, series_type):
    """76-vector before standardization; missing statistics become NaN
    so the standardizer can both skip and later zero them."""
    vals = np.asarray(stat.values, dtype=float).copy()
    vals[np.asarray(stat.missing, dtype=bool)] = np.nan
    emb = np.asarray(embedding, dtype=float).reshape(-1)
    out = np.concatenate([vals, emb,
                          [float(period_code(period)),
                           float(type_code(series_type))]])
    if out.size != N_INPUT:
        raise ShapeMismatch(f"expected {N_INPUT} features, got {out.size}")
    return out


class Standardizer:
    """Columnwise (x - mean) / std with NaNs excluded from the moments
    and zeroed after the transform. Std floor 1e-8."""

    def __init__(self, mean, std):
        self.mean = np.asarray(mean, dtype=float)
        self.std = np.asarray(std, dtype=float)

    @classmethod
    def fit(cls, X):
        X = np.asarray(X, dtype=float)
        mean = np.nanmean(X, axis=0)
        std = np.nanstd(X, axis=0)
        mean = np.where(np.isfinite(mean), mean, 0.0)
        std = np.where(np.isfinite(std), std, 0.0)
        return cls(mean, np.maximum(std, 1e-8))

    def transform(self, X):
        z = (np.asarray(X, dtype=float) - self.mean) / self.std
        return np.where(np.isfinite(z), z, 0.0)

    def to_state(self):
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_state(cls, state):
        return cls(state["mean"], state["std"])


def build_features(stat, embedding, period, series_type, standardizer):
    raw = raw_feature_vector(stat, embedding, period, series_type)
    return standardizer.transform(raw[None, :])[0]


class WeightNet:
    """76 -> rectifier hidden -> dropout -> zero-initialized linear ->
    softmax over the 14 models. Zero init makes the untrained net emit
    exactly uniform 1/14 weights."""

    def __init__(self, config, seed, n_features=N_INPUT, n_models=N_MODELS):
        self.config = config
        self.seed = int(seed)
        self.n_features = n_features
        self.n_models = n_models
        rng = np.random.default_rng(self.seed)
        self.hidden = Dense(rng, n_features, config.hidden_dim,
                            activation="relu")
        self.head = Dense(rng, config.hidden_dim, n_models,
                          activation="softmax", zero_init=True)

    def layers(self):
        return {"hidden": self.hidden, "head": self.head}

    def params(self):
        out = {}
        for prefix, layer in self.layers().items():
            out.update(layer.params(prefix))
        return out

    def grads(self):
        out = {}
        for prefix, layer in self.layers().items():
            out.update(layer.grads(prefix))
        return out

    def zero_grad(self):
        for layer in self.layers().values():
            layer.zero_grad()

    def forward(self, X, rng=None, training=False):
        X = np.asarray(X, dtype=float)
        squeeze = X.ndim == 1
        if squeeze:
            X = X[None, :]
        rate = self.config.dropout if training else 0.0
        hid, c1 = self.hidden.forward(X)
        hd, m = dropout(hid, rate, rng, training)
        w, c2 = self.head.forward(hd)
        cache = (c1, m, c2)
        return (w[0] if squeeze else w), cache

    def backward(self, dw, cache):
        c1, m, c2 = cache
        dh = self.head.backward(dw, c2)
        if m is not None:
            dh = dh * m
        self.hidden.backward(dh, c1)

    def to_state(self):
        return {
            "schema_version": 1,
            "kind": "weight_net",
            "config": asdict(self.config),
            "seed": self.seed,
            "n_features": self.n_features,
            "n_models": self.n_models,
            "layers": layers_state(self.layers()),
        }

    @classmethod
    def from_state(cls, state):
        net = cls(WeightNetConfig(**state["config"]), state["seed"],
                  n_features=state["n_features"], n_models=state["n_models"])
        load_layers_state(net.layers(), state["layers"])
        return net


def combine(weights, forecasts):
    """Weighted average forecast: y_t = sum_i w_i b_it."""
    w = np.asarray(weights, dtype=float)
    B = np.asarray(forecasts.b if hasattr(forecasts, "b") else forecasts,
                   dtype=float)
    if w.shape[0] != B.shape[0]:
        raise ShapeMismatch(f"{w.shape[0]} weights vs {B.shape[0]} models")
    return w @ B


@dataclass
class TrainingRow:
    """One series' assembled training example."""
    series_id: str
    features_raw: np.ndarray      # (76,) with NaN at missing stats
    forecasts: np.ndarray         # (n_models, h)
    actual: np.ndarray            # (h,)
    smape_ref: float              # naive2 sMAPE on the holdout
    mase_ref: float               # naive2 MASE on the holdout
    mase_denom: float             # seasonal-naive in-sample MAE


def make_training_row(series_id, stat, embedding, period, series_type,
                      forecasts, actual, smape_ref, mase_ref, mase_denom):
    missing = {"statistics": stat, "embedding": embedding,
               "forecasts": forecasts, "actual": actual}
    for part, value in missing.items():
        if value is None:
            raise MissingPart(series_id, part)
    return TrainingRow(
        series_id=series_id,
        features_raw=raw_feature_vector(stat, embedding, period, series_type),
        forecasts=np.asarray(forecasts.b if hasattr(forecasts, "b")
                             else forecasts, dtype=float),
        actual=np.asarray(actual, dtype=float),
        smape_ref=float(smape_ref),
        mase_ref=float(mase_ref),
        mase_denom=float(mase_denom),
    )


def series_owa_and_grad(weights, row, floor=1e-9):
    """Per-series OWA of the combined forecast and its gradient in the
    weights. Zero-denominator sMAPE terms contribute zero, matching the
    metric; sign(0) = 0 keeps the subgradient bounded."""
    B = row.forecasts
    y = row.actual
    h = y.size
    yhat = weights @ B
    d = yhat - y
    den = np.abs(y) + np.abs(yhat)
    ok = den > 0.0
    terms = np.zeros(h)
    terms[ok] = np.abs(d[ok]) / den[ok]
    smape = 200.0 * terms.mean()
    mase = np.abs(d).mean() / row.mase_denom
    s_ref = max(row.smape_ref, floor)
    m_ref = max(row.mase_ref, floor)
    owa = 0.5 * (smape / s_ref + mase / m_ref)

    dsmape_dyhat = np.zeros(h)
    sgn = np.sign(d[ok])
    dsmape_dyhat[ok] = (200.0 / h) * (sgn * den[ok] - np.abs(d[ok])
                                      * np.sign(yhat[ok])) / den[ok] ** 2
    dmase_dyhat = np.sign(d) / (h * row.mase_denom)
    dyhat = 0.5 * (dsmape_dyhat / s_ref + dmase_dyhat / m_ref)
    return owa, B @ dyhat


def corpus_owa(net, X, rows):
    """Mean per-series OWA with dropout off."""
    W, _ = net.forward(X, training=False)
    total = 0.0
    for w, row in zip(W, rows):
        owa, _ = series_owa_and_grad(w, row)
        total += owa
    return total / len(rows)


def train_weight_net(rows, config, seed, val_fraction=0.2):
    """Train on assembled rows; 80/20 split follows the corpus
    partitioner. Returns (net, standardizer, history) where history rows
    are (epoch, train_owa, val_owa) and epoch 0 is the uniform baseline.
    """
    n = len(rows)
    if n < 2:
        raise ValueError("need at least two rows")
    rng = np.random.default_rng(seed)
    train_idx, val_idx = partition_indices(n, 1.0 - val_fraction, seed)
    raw = np.stack([r.features_raw for r in rows])
    standardizer = Standardizer.fit(raw[train_idx])
    X = standardizer.transform(raw)

    train_rows = [rows[i] for i in train_idx]
    val_rows = [rows[i] for i in val_idx]
    X_train = X[train_idx]
    X_val = X[val_idx]

    net = WeightNet(config, seed=int(rng.integers(0, 2 ** 63 - 1)),
                    n_features=X.shape[1],
                    n_models=rows[0].forecasts.shape[0])
    opt = AdamW(net.params(), lr=config.lr, weight_decay=config.weight_decay)
    history = [(0, corpus_owa(net, X_train, train_rows),
                corpus_owa(net, X_val, val_rows))]
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(train_rows))
        for lo in range(0, len(order), config.batch_size):
            batch = order[lo:lo + config.batch_size]
            net.zero_grad()
            W, cache = net.forward(X_train[batch], rng=rng, training=True)
            dW = np.zeros_like(W)
            loss = 0.0
            for j, i in enumerate(batch):
                owa, gw = series_owa_and_grad(W[j], train_rows[i])
                loss += owa
                dW[j] = gw / len(batch)
            loss /= len(batch)
            if not np.isfinite(loss):
                raise DivergenceDetected(f"loss became {loss} "
                                         f"at epoch {epoch}")
            net.backward(dW, cache)
            opt.step(net.grads())
        history.append((epoch, corpus_owa(net, X_train, train_rows),
                        corpus_owa(net, X_val, val_rows)))
    return net, standardizer, history


def ensemble_usage_stats(weight_matrix, threshold=0.05):
    """Effective ensemble sizes (count of weights above threshold) and
    the mean weight per model."""
    W = np.asarray(weight_matrix, dtype=float)
    sizes = (W > threshold).sum(axis=1)
    histogram = {int(s): int(c) for s, c in
                 zip(*np.unique(sizes, return_counts=True))}
    mean_weight = {model: float(W[:, i].mean())
                   for i, model in enumerate(MODEL_ORDER)}
    return {"histogram": histogram, "mean_weight": mean_weight}
