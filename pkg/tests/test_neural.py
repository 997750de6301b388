import numpy as np
import pytest

from donut.neural import (AdamW, Dense, LstmLayer, ShapeMismatch,
                          clip_global_norm, dropout, early_stop, grad_check,
                          layers_state, load_layers_state, sigmoid, softmax)


def test_dense_zero_map():
    layer = Dense(np.random.default_rng(0), 3, 2)
    layer.W[:] = 0.0
    layer.b[:] = 0.0
    out, _ = layer.forward(np.ones((4, 3)))
    assert np.all(out == 0.0)


def test_softmax_uniform_on_equal_logits():
    w = softmax(np.zeros((1, 14)))
    assert np.all(w == 1.0 / 14)


def test_softmax_saturation():
    z = np.zeros((1, 5))
    z[0, 2] = 20.0
    w = softmax(z)
    assert w[0, 2] > 0.999


def test_sigmoid_symmetry():
    assert sigmoid(np.array([0.0]))[0] == 0.5
    assert sigmoid(np.array([50.0]))[0] == pytest.approx(1.0)
    # stable in both tails
    out = sigmoid(np.array([-800.0, 800.0]))
    assert np.all(np.isfinite(out))


def test_lstm_zero_params_zero_state():
    layer = LstmLayer(np.random.default_rng(0), 2, 3)
    for p in layer.params("l").values():
        p[:] = 0.0
    x = np.ones((1, 4, 2))
    out, state = layer.forward(x)
    # gates 0.5, candidate tanh(0)=0 -> c stays 0, h stays 0
    assert np.all(out == 0.0)


def test_lstm_forget_gate_identity():
    layer = LstmLayer(np.random.default_rng(1), 1, 2)
    for p in layer.params("l").values():
        p[:] = 0.0
    # saturate forget gate to 1 and input gate to 0 (gate order i,f,g,o)
    H = layer.n_hidden
    layer.b[:H] = -50.0
    layer.b[H:2 * H] = 50.0
    c_prev = np.array([[0.7, -0.3]])
    h_prev = np.zeros((1, 2))
    h, c, _ = layer.step(np.array([[1.0]]), h_prev, c_prev)
    assert np.allclose(c, c_prev, atol=1e-12)


def test_lstm_forget_bias_initialized_to_one():
    layer = LstmLayer(np.random.default_rng(2), 3, 5)
    H = layer.n_hidden
    assert np.all(layer.b[H:2 * H] == 1.0)
    assert np.all(layer.b[:H] == 0.0)


def test_dense_gradients_linear_exact():
    # linear network + squared loss is exactly quadratic: central
    # differences are exact up to float noise
    rng = np.random.default_rng(2)
    layer = Dense(rng, 4, 3)
    x = rng.normal(size=(5, 4))
    target = rng.normal(size=(5, 3))

    def loss_fn():
        layer.zero_grad()
        out, cache = layer.forward(x)
        diff = out - target
        layer.backward(2 * diff / diff.size, cache)
        return float((diff ** 2).mean()), layer.grads("d")

    assert grad_check(loss_fn, layer.params("d")) < 1e-8


def test_dense_jacobian_small_layer():
    rng = np.random.default_rng(3)
    layer = Dense(rng, 3, 2, activation="relu")
    x = rng.normal(size=(4, 3)) + 0.1  # keep away from the kink

    def loss_fn():
        layer.zero_grad()
        out, cache = layer.forward(x)
        layer.backward(np.cos(out), cache)
        return float(np.sin(out).sum()), layer.grads("d")

    assert grad_check(loss_fn, layer.params("d")) < 1e-6


def test_lstm_cell_gradients():
    rng = np.random.default_rng(4)
    layer = LstmLayer(rng, 3, 4)
    x = rng.normal(size=(2, 6, 3))

    def loss_fn():
        layer.zero_grad()
        out, state = layer.forward(x)
        layer.backward(2 * out / out.size, state)
        return float((out ** 2).mean()), layer.grads("l")

    assert grad_check(loss_fn, layer.params("l")) < 1e-4


def test_grad_check_catches_corruption():
    rng = np.random.default_rng(5)
    layer = Dense(rng, 3, 2)
    x = rng.normal(size=(4, 3))

    def loss_fn():
        layer.zero_grad()
        out, cache = layer.forward(x)
        layer.backward(2 * out / out.size, cache)
        grads = layer.grads("d")
        grads["d.W"] = grads["d.W"].copy()
        grads["d.W"][0, 0] *= 2.0  # deliberately wrong entry
        return float((out ** 2).mean()), grads

    assert grad_check(loss_fn, layer.params("d")) > 0.1


def test_adamw_identities():
    w = np.array([1.0, -2.0])
    opt = AdamW({"w": w}, lr=0.01, weight_decay=0.0)
    opt.step({"w": np.zeros(2)})
    assert np.array_equal(w, [1.0, -2.0])

    w2 = np.array([1.0, -2.0])
    opt2 = AdamW({"w": w2}, lr=0.01, weight_decay=0.1)
    opt2.step({"w": np.zeros(2)})
    # decoupled decay: w' = w * (1 - lr * wd)
    assert np.allclose(w2, np.array([1.0, -2.0]) * (1 - 0.01 * 0.1))


def test_adamw_quadratic_descent():
    w = np.array([1.0])
    opt = AdamW({"w": w}, lr=0.01)
    trail = [abs(w[0])]
    for _ in range(100):
        opt.step({"w": 2 * w})
        trail.append(abs(w[0]))
    # monotone after warmup
    assert all(b <= a + 1e-12 for a, b in zip(trail[5:], trail[6:]))
    assert trail[-1] < trail[0]


def test_early_stop_traces():
    assert early_stop([3, 2, 1], 5) == (3, None)
    assert early_stop([3, 1, 2, 2, 2], 3) == (2, 5)
    assert early_stop([1, 2, 3], 1) == (1, 2)


def test_dropout_identity_at_inference():
    x = np.ones((3, 3))
    out, mask = dropout(x, 0.5, np.random.default_rng(0), training=False)
    assert out is x and mask is None


def test_dropout_scaling_preserves_mean():
    rng = np.random.default_rng(6)
    x = np.ones((200, 200))
    out, _ = dropout(x, 0.3, rng, training=True)
    assert out.mean() == pytest.approx(1.0, abs=0.02)


def test_clip_global_norm():
    g = {"a": np.array([3.0, 4.0])}
    norm = clip_global_norm(g, 1.0)
    assert norm == pytest.approx(5.0)
    assert np.allclose(g["a"], [0.6, 0.8])


def test_layers_state_round_trip():
    rng = np.random.default_rng(7)
    a = LstmLayer(rng, 2, 3)
    b = LstmLayer(np.random.default_rng(99), 2, 3)
    state = layers_state({"l": a})
    load_layers_state({"l": b}, state)
    for (ka, va), (kb, vb) in zip(sorted(a.params("l").items()),
                                  sorted(b.params("l").items())):
        assert ka == kb and np.array_equal(va, vb)
