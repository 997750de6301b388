"""LSTM autoencoder producing fixed-length series embeddings.

Two LSTM layers on each side with dropout between them; the embedding is
a linear projection of the second encoder layer's final hidden state,
and the decoder consumes that embedding repeated at every step through
two LSTM layers plus a linear read-out. Loss is masked MSE on
standardized sequences.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from .neural import (AdamW, Dense, LstmLayer, clip_global_norm, dropout,
                     layers_state, load_layers_state)


class UntrainedModel(Exception):
    pass


class DivergenceDetected(Exception):
    pass


@dataclass
class AeConfig:
    embedding_dim: int = 32
    hidden_dim: int = 128
    epochs: int = 500
    batch_size: int = 512
    lr: float = 0.002
    weight_decay: float = 0.005
    dropout: float = 0.20
    max_length: int = 500
    validation_fraction: float = 0.2
    patience: int = 0            # 0 disables early stopping
    clip_norm: float = 5.0

    def __post_init__(self):
        if self.embedding_dim >= self.max_length:
            raise ValueError("embedding must be narrower than the sequences")


def desk_ae_config(**overrides):
    """Small configuration for laptop-scale runs."""
    base = dict(hidden_dim=64, embedding_dim=32, epochs=100, batch_size=64)
    base.update(overrides)
    return AeConfig(**base)


def preprocess(values, max_length):
    """Standardize the last min(n, max_length) points; returns
    (standardized, mean, std) with the std floored at 1e-8."""
    y = np.asarray(values, dtype=float)
    y = y[-int(max_length):] if len(y) > max_length else y
    mean = float(y.mean())
    std = max(float(y.std()), 1e-8)
    return (y - mean) / std, mean, std


class LstmAutoencoder:
    def __init__(self, config, seed):
        self.config = config
        self.seed = int(seed)
        rng = np.random.default_rng(self.seed)
        H = config.hidden_dim
        E = config.embedding_dim
        self.enc1 = LstmLayer(rng, 1, H)
        self.enc2 = LstmLayer(rng, H, H)
        self.proj = Dense(rng, H, E, activation="identity")
        self.dec1 = LstmLayer(rng, E, H)
        self.dec2 = LstmLayer(rng, H, H)
        self.readout = Dense(rng, H, 1, activation="identity")
        self.trained = False
        self.history = []

    def layers(self):
        return {"enc1": self.enc1, "enc2": self.enc2, "proj": self.proj,
                "dec1": self.dec1, "dec2": self.dec2, "readout": self.readout}

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

    # x: (B, T, 1), mask: (B, T) of 0/1 floats or None
    def forward(self, x, mask=None, rng=None, training=False):
        B, T, _ = x.shape
        rate = self.config.dropout if training else 0.0
        o1, s1 = self.enc1.forward(x, mask)
        o1d, m_enc = dropout(o1, rate, rng, training)
        o2, s2 = self.enc2.forward(o1d, mask)
        h_last = o2[:, -1, :]
        emb, sp = self.proj.forward(h_last)
        dec_in = np.repeat(emb[:, None, :], T, axis=1)
        d1, sd1 = self.dec1.forward(dec_in, mask)
        d1d, m_dec = dropout(d1, rate, rng, training)
        d2, sd2 = self.dec2.forward(d1d, mask)
        flat, sr = self.readout.forward(d2.reshape(B * T, -1))
        recon = flat.reshape(B, T)
        cache = (s1, m_enc, s2, sp, sd1, m_dec, sd2, sr, (B, T))
        return recon, emb, cache

    def backward(self, drecon, demb_extra, cache):
        s1, m_enc, s2, sp, sd1, m_dec, sd2, sr, (B, T) = cache
        dflat = self.readout.backward(drecon.reshape(B * T, 1), sr)
        dd2 = dflat.reshape(B, T, -1)
        dd1, _, _ = self.dec2.backward(dd2, sd2)
        if m_dec is not None:
            dd1 = dd1 * m_dec
        ddec_in, _, _ = self.dec1.backward(dd1, sd1)
        demb = ddec_in.sum(axis=1)
        if demb_extra is not None:
            demb = demb + demb_extra
        dh_last = self.proj.backward(demb, sp)
        do2 = np.zeros((B, T, self.config.hidden_dim))
        do2[:, -1, :] = dh_last
        do1, _, _ = self.enc2.backward(do2, s2)
        if m_enc is not None:
            do1 = do1 * m_enc
        self.enc1.backward(do1, s1)

    def to_state(self):
        return {
            "schema_version": 1,
            "kind": "lstm_autoencoder",
            "config": asdict(self.config),
            "seed": self.seed,
            "trained": self.trained,
            "history": self.history,
            "layers": layers_state(self.layers()),
        }

    @classmethod
    def from_state(cls, state):
        model = cls(AeConfig(**state["config"]), state["seed"])
        load_layers_state(model.layers(), state["layers"])
        model.trained = bool(state.get("trained", False))
        model.history = [tuple(h) for h in state.get("history", [])]
        return model


def masked_mse(recon, target, mask):
    """Mean squared error over valid steps; returns (loss, d_recon)."""
    if mask is None:
        diff = recon - target
        denom = diff.size
    else:
        diff = (recon - target) * mask
        denom = float(mask.sum())
    loss = float((diff * diff).sum()) / denom
    return loss, 2.0 * diff / denom


def _prepare(series_list, max_length):
    prepped = []
    for values in series_list:
        v = values.values if hasattr(values, "values") else values
        z, _, _ = preprocess(v, max_length)
        prepped.append(z)
    return prepped


def _batches(prepped, indices, batch_size):
    """Length-sorted batches padded at the end with a 0/1 mask."""
    order = sorted(indices, key=lambda i: (len(prepped[i]), i))
    out = []
    for lo in range(0, len(order), batch_size):
        chunk = order[lo:lo + batch_size]
        tmax = max(len(prepped[i]) for i in chunk)
        x = np.zeros((len(chunk), tmax, 1))
        mask = np.zeros((len(chunk), tmax))
        for r, i in enumerate(chunk):
            z = prepped[i]
            x[r, :len(z), 0] = z
            mask[r, :len(z)] = 1.0
        if all(len(prepped[i]) == tmax for i in chunk):
            mask_arg = None  # uniform length, no padding to hide
        else:
            mask_arg = mask
        out.append((x, mask, mask_arg))
    return out


def _epoch_loss(model, batches, weights):
    total = 0.0
    wsum = 0.0
    for (x, mask, mask_arg), w in zip(batches, weights):
        recon, _, _ = model.forward(x, mask_arg, training=False)
        loss, _ = masked_mse(recon, x[:, :, 0], mask_arg)
        total += loss * w
        wsum += w
    return total / wsum


def train_autoencoder(series_list, config, seed):
    """Train on a list of series (arrays or TimeSeries); returns the model.

    history rows are (epoch, train_loss, val_loss). Non-finite loss
    raises DivergenceDetected.
    """
    if len(series_list) < 2:
        raise ValueError("need at least two series")
    prepped = _prepare(series_list, config.max_length)
    n = len(prepped)
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    n_val = int(round(config.validation_fraction * n))
    n_val = min(max(n_val, 1 if n > 1 else 0), n - 1)
    val_idx = np.sort(perm[:n_val])
    train_idx = np.sort(perm[n_val:])

    model = LstmAutoencoder(config, seed=int(rng.integers(0, 2 ** 63 - 1)))
    train_batches = _batches(prepped, train_idx, config.batch_size)
    val_batches = _batches(prepped, val_idx, config.batch_size)
    train_weights = [b[0].shape[0] for b in train_batches]
    val_weights = [b[0].shape[0] for b in val_batches]

    opt = AdamW(model.params(), lr=config.lr, weight_decay=config.weight_decay)
    best_val = np.inf
    best_epoch = 0
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(train_batches))
        total = 0.0
        wsum = 0.0
        for bi in order:
            x, mask, mask_arg = train_batches[bi]
            model.zero_grad()
            recon, _, cache = model.forward(x, mask_arg, rng=rng, training=True)
            loss, drecon = masked_mse(recon, x[:, :, 0], mask_arg)
            if not np.isfinite(loss):
                raise DivergenceDetected(f"training loss became {loss} "
                                         f"at epoch {epoch}")
            model.backward(drecon, None, cache)
            grads = model.grads()
            clip_global_norm(grads, config.clip_norm)
            opt.step(grads)
            total += loss * x.shape[0]
            wsum += x.shape[0]
        train_loss = total / wsum
        val_loss = _epoch_loss(model, val_batches, val_weights)
        if not np.isfinite(val_loss):
            raise DivergenceDetected(f"validation loss became {val_loss}")
        model.history.append((epoch, float(train_loss), float(val_loss)))
        if val_loss < best_val:
            best_val = val_loss
            best_epoch = epoch
        elif config.patience and epoch - best_epoch >= config.patience:
            break
    model.trained = True
    return model


def encode(model, values):
    """Length-32 (or config-width) embedding of one series."""
    if not model.trained:
        raise UntrainedModel("encode requires a trained model")
    z, _, _ = preprocess(values.values if hasattr(values, "values") else values,
                         model.config.max_length)
    x = z.reshape(1, -1, 1)
    _, emb, _ = model.forward(x, training=False)
    return emb[0].copy()


def decode_reconstruct(model, values):
    """Reconstruction of one series in its original units."""
    if not model.trained:
        raise UntrainedModel("decode requires a trained model")
    raw = values.values if hasattr(values, "values") else values
    z, mean, std = preprocess(raw, model.config.max_length)
    x = z.reshape(1, -1, 1)
    recon, _, _ = model.forward(x, training=False)
    return recon[0] * std + mean
