"""Minimal dense/LSTM neural machinery on float64 numpy: explicit
forward/backward passes, AdamW, inverted dropout, early stopping, and a
central finite-difference gradient checker.

Everything is deterministic given the rng handed in; no global state.
"""

from __future__ import annotations

import numpy as np


class ShapeMismatch(Exception):
    pass


def sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax(z):
    """Row-wise softmax, shift-invariant and overflow-safe."""
    z = np.asarray(z, dtype=float)
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _init_matrix(rng, n_in, n_out):
    limit = 1.0 / np.sqrt(n_in)
    return rng.uniform(-limit, limit, size=(n_in, n_out))


class Dense:
    """y = g(x W + b) with g in {identity, relu, tanh, softmax}."""

    def __init__(self, rng, n_in, n_out, activation="identity", zero_init=False):
        if activation not in ("identity", "relu", "tanh", "softmax"):
            raise ValueError(f"unknown activation {activation!r}")
        self.n_in = n_in
        self.n_out = n_out
        self.activation = activation
        if zero_init:
            self.W = np.zeros((n_in, n_out))
        else:
            self.W = _init_matrix(rng, n_in, n_out)
        self.b = np.zeros(n_out)
        self.dW = np.zeros_like(self.W)
        self.db = np.zeros_like(self.b)

    def forward(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n_in:
            raise ShapeMismatch(f"expected {self.n_in} inputs, got {x.shape[-1]}")
        z = x @ self.W + self.b
        if self.activation == "identity":
            y = z
        elif self.activation == "relu":
            y = np.maximum(z, 0.0)
        elif self.activation == "tanh":
            y = np.tanh(z)
        else:
            y = softmax(z)
        return y, (x, z, y)

    def backward(self, dy, cache):
        x, z, y = cache
        if self.activation == "identity":
            dz = dy
        elif self.activation == "relu":
            dz = dy * (z > 0.0)
        elif self.activation == "tanh":
            dz = dy * (1.0 - y * y)
        else:
            dz = y * (dy - (dy * y).sum(axis=-1, keepdims=True))
        self.dW += x.reshape(-1, self.n_in).T @ dz.reshape(-1, self.n_out)
        self.db += dz.reshape(-1, self.n_out).sum(axis=0)
        return dz @ self.W.T

    def zero_grad(self):
        self.dW[:] = 0.0
        self.db[:] = 0.0

    def params(self, prefix):
        return {f"{prefix}.W": self.W, f"{prefix}.b": self.b}

    def grads(self, prefix):
        return {f"{prefix}.W": self.dW, f"{prefix}.b": self.db}


class LstmLayer:
    """Standard LSTM over (B, T, D) inputs, gate order i, f, g, o.

    An optional (B, T) mask freezes state on padded steps, so the final
    hidden state is the state at each sequence's last valid step.
    """

    def __init__(self, rng, n_in, n_hidden):
        self.n_in = n_in
        self.n_hidden = n_hidden
        self.Wx = _init_matrix(rng, n_in, 4 * n_hidden)
        self.Wh = _init_matrix(rng, n_hidden, 4 * n_hidden)
        self.b = np.zeros(4 * n_hidden)
        self.b[n_hidden:2 * n_hidden] = 1.0  # forget bias
        self.dWx = np.zeros_like(self.Wx)
        self.dWh = np.zeros_like(self.Wh)
        self.db = np.zeros_like(self.b)

    def step(self, x_t, h_prev, c_prev):
        """One cell update; returns (h, c, cache)."""
        H = self.n_hidden
        if x_t.shape[-1] != self.n_in or h_prev.shape[-1] != H:
            raise ShapeMismatch("lstm step shapes disagree")
        z = x_t @ self.Wx + h_prev @ self.Wh + self.b
        i = sigmoid(z[:, :H])
        f = sigmoid(z[:, H:2 * H])
        g = np.tanh(z[:, 2 * H:3 * H])
        o = sigmoid(z[:, 3 * H:])
        c = f * c_prev + i * g
        tc = np.tanh(c)
        h = o * tc
        return h, c, (x_t, h_prev, c_prev, i, f, g, o, c, tc)

    def step_backward(self, dh, dc, cache):
        x_t, h_prev, c_prev, i, f, g, o, c, tc = cache
        do = dh * tc
        dcell = dc + dh * o * (1.0 - tc * tc)
        di = dcell * g
        df = dcell * c_prev
        dg = dcell * i
        dc_prev = dcell * f
        dz = np.concatenate([
            di * i * (1.0 - i),
            df * f * (1.0 - f),
            dg * (1.0 - g * g),
            do * o * (1.0 - o),
        ], axis=1)
        self.dWx += x_t.T @ dz
        self.dWh += h_prev.T @ dz
        self.db += dz.sum(axis=0)
        dx_t = dz @ self.Wx.T
        dh_prev = dz @ self.Wh.T
        return dx_t, dh_prev, dc_prev

    def forward(self, x, mask=None, h0=None, c0=None):
        x = np.asarray(x, dtype=float)
        B, T, D = x.shape
        H = self.n_hidden
        h = np.zeros((B, H)) if h0 is None else h0
        c = np.zeros((B, H)) if c0 is None else c0
        out = np.empty((B, T, H))
        caches = []
        for t in range(T):
            h_new, c_new, cache = self.step(x[:, t, :], h, c)
            if mask is not None:
                m = mask[:, t:t + 1]
                h_new = m * h_new + (1.0 - m) * h
                c_new = m * c_new + (1.0 - m) * c
            out[:, t, :] = h_new
            caches.append((cache, h, c))
            h, c = h_new, c_new
        return out, (caches, mask, x.shape)

    def backward(self, dout, state, dh_last=None, dc_last=None):
        caches, mask, (B, T, D) = state
        H = self.n_hidden
        dx = np.zeros((B, T, D))
        dh_next = np.zeros((B, H)) if dh_last is None else dh_last.copy()
        dc_next = np.zeros((B, H)) if dc_last is None else dc_last.copy()
        for t in range(T - 1, -1, -1):
            cache, h_prev, c_prev = caches[t]
            dh = dh_next + dout[:, t, :]
            dc = dc_next
            if mask is not None:
                m = mask[:, t:t + 1]
                dh_in = dh * m
                dc_in = dc * m
                dh_carry = dh * (1.0 - m)
                dc_carry = dc * (1.0 - m)
            else:
                dh_in, dc_in = dh, dc
                dh_carry = dc_carry = 0.0
            dx_t, dh_prev, dc_prev = self.step_backward(dh_in, dc_in, cache)
            dx[:, t, :] = dx_t
            dh_next = dh_prev + dh_carry
            dc_next = dc_prev + dc_carry
        return dx, dh_next, dc_next

    def zero_grad(self):
        self.dWx[:] = 0.0
        self.dWh[:] = 0.0
        self.db[:] = 0.0

    def params(self, prefix):
        return {f"{prefix}.Wx": self.Wx, f"{prefix}.Wh": self.Wh,
                f"{prefix}.b": self.b}

    def grads(self, prefix):
        return {f"{prefix}.Wx": self.dWx, f"{prefix}.Wh": self.dWh,
                f"{prefix}.b": self.db}


class AdamW:
    """Adam with decoupled multiplicative weight decay.

    params is a dict of name -> array; updates happen in place so layer
    objects keep seeing their own weights.
    """

    def __init__(self, params, lr, weight_decay=0.0, beta1=0.9, beta2=0.999,
                 eps=1e-8):
        self.params = params
        self.lr = lr
        self.weight_decay = weight_decay
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, grads):
        self.step_count += 1
        t = self.step_count
        b1, b2 = self.beta1, self.beta2
        for k, p in self.params.items():
            g = grads[k]
            if self.weight_decay:
                p *= 1.0 - self.lr * self.weight_decay
            m = self.m[k]
            v = self.v[k]
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            mhat = m / (1.0 - b1 ** t)
            vhat = v / (1.0 - b2 ** t)
            p -= self.lr * mhat / (np.sqrt(vhat) + self.eps)

    def state_dict(self):
        return {
            "step_count": self.step_count,
            "m": {k: v.tolist() for k, v in self.m.items()},
            "v": {k: v.tolist() for k, v in self.v.items()},
        }

    def load_state_dict(self, state):
        self.step_count = int(state["step_count"])
        for k in self.m:
            self.m[k] = np.asarray(state["m"][k], dtype=float).reshape(self.m[k].shape)
            self.v[k] = np.asarray(state["v"][k], dtype=float).reshape(self.v[k].shape)


def dropout(x, rate, rng, training=True):
    """Inverted dropout; returns (output, mask). Identity at inference."""
    if not training or rate <= 0.0:
        return x, None
    keep = 1.0 - rate
    mask = (rng.random(x.shape) < keep).astype(float) / keep
    return x * mask, mask


def clip_global_norm(grads, max_norm):
    """Scale the whole gradient dict so its global L2 norm is <= max_norm."""
    total = 0.0
    for g in grads.values():
        total += float((g * g).sum())
    norm = np.sqrt(total)
    if norm > max_norm and norm > 0.0:
        scale = max_norm / norm
        for g in grads.values():
            g *= scale
    return norm


def early_stop(losses, patience):
    """(best_epoch, stop_epoch) from per-epoch losses, epochs 1-based.

    stop_epoch is None when patience never ran out; the best epoch is the
    first minimum.
    """
    if len(losses) == 0:
        raise ValueError("need at least one epoch")
    best_loss = np.inf
    best_epoch = 0
    for e, loss in enumerate(losses, start=1):
        if loss < best_loss:
            best_loss = loss
            best_epoch = e
        elif e - best_epoch >= patience:
            return best_epoch, e
    return best_epoch, None


def grad_check(loss_fn, params, step=1e-5):
    """Max relative error between analytic gradients and central
    differences over every coordinate of every parameter array.

    loss_fn() must return (loss, grads dict) evaluated at the current
    parameter values, deterministically. Each coordinate is compared
    relative to max(|analytic|, |numeric|), floored at a thousandth of
    the array's largest gradient coordinate: below that scale a central
    difference carries no trustworthy digits, while any coordinate that
    actually matters is still checked strictly.
    """
    _, live = loss_fn()
    # snapshot now: layers hand out live buffers that later calls overwrite
    grads = {k: np.asarray(v).reshape(-1).copy() for k, v in live.items()}
    pairs = []
    for name, p in params.items():
        gflat = grads[name]
        flat = p.reshape(-1)
        numeric = np.empty_like(gflat)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            up, _ = loss_fn()
            flat[i] = orig - step
            down, _ = loss_fn()
            flat[i] = orig
            numeric[i] = (up - down) / (2.0 * step)
        pairs.append((gflat, numeric))
    scale = max((float(np.maximum(np.abs(a), np.abs(n)).max(initial=0.0))
                 for a, n in pairs), default=0.0)
    floor = max(1e-3 * scale, 1e-8)
    worst = 0.0
    for gflat, numeric in pairs:
        denom = np.maximum(np.maximum(np.abs(gflat), np.abs(numeric)), floor)
        rel = np.abs(gflat - numeric) / denom
        worst = max(worst, float(rel.max(initial=0.0)))
    return worst


def layers_state(layers):
    """Checkpoint payload: {name: {shape, values row-major}}."""
    out = {}
    for prefix, layer in layers.items():
        for name, arr in layer.params(prefix).items():
            out[name] = {"shape": list(arr.shape), "values": arr.ravel().tolist()}
    return out


def load_layers_state(layers, state):
    for prefix, layer in layers.items():
        for name, arr in layer.params(prefix).items():
            rec = state[name]
            loaded = np.asarray(rec["values"], dtype=float).reshape(rec["shape"])
            if loaded.shape != arr.shape:
                raise ShapeMismatch(f"{name}: checkpoint shape {loaded.shape} "
                                    f"vs model {arr.shape}")
            arr[:] = loaded
