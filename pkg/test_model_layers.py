"""
Gradient checks for the hand-written layers, the latent product of experts,
the loss and the decoder's synthesis stage, against central differences.
"""

import numpy as np
import pytest

from app.channel.csi import FrequencyGrid
from app.model.gaussian import poe_backward, poe_forward
from app.model.layers import LSTM, BatchNorm1D, Conv1D, Dense, ReLU
from app.model.loss import clcp_loss
from app.model.network import Booster, synthesis_backward, synthesis_forward
from app.schemas import ModelConfig

EPS = 1e-6


def numeric_grad(f, x):
    """Central-difference gradient of scalar ``f()`` w.r.t. array ``x`` (perturbed in place)."""
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        i = it.multi_index
        old = x[i]
        x[i] = old + EPS
        up = f()
        x[i] = old - EPS
        down = f()
        x[i] = old
        g[i] = (up - down) / (2 * EPS)
    return g


def check_layer(layer, x, training=False, rtol=1e-5, atol=1e-7):
    rng = np.random.default_rng(1)
    out, cache = layer.forward(x, training)
    weights = rng.standard_normal(out.shape)

    def loss():
        return float(np.sum(layer.forward(x, training)[0] * weights))

    layer.zero_grad()
    dx = layer.backward(weights, cache)
    np.testing.assert_allclose(dx, numeric_grad(loss, x), rtol=rtol, atol=atol)
    for name, p in layer.params.items():
        np.testing.assert_allclose(layer.grads[name], numeric_grad(loss, p), rtol=rtol, atol=atol,
                                   err_msg=name)


def test_dense_gradients():
    rng = np.random.default_rng(0)
    check_layer(Dense(5, 3, rng), rng.standard_normal((4, 5)))


def test_dense_over_sequence_axis():
    rng = np.random.default_rng(0)
    check_layer(Dense(4, 2, rng), rng.standard_normal((3, 6, 4)))


def test_relu_gradients():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((3, 7))
    x[np.abs(x) < 1e-3] = 0.5
    check_layer(ReLU(), x)


def test_conv_gradients():
    rng = np.random.default_rng(0)
    check_layer(Conv1D(3, 4, 3, rng), rng.standard_normal((2, 3, 8)))


def test_conv_rejects_even_kernel():
    with pytest.raises(ValueError):
        Conv1D(2, 2, 4, np.random.default_rng(0))


def test_batchnorm_training_gradients():
    rng = np.random.default_rng(0)
    bn = BatchNorm1D(3)
    bn.params["gamma"] = rng.uniform(0.5, 1.5, 3)
    bn.params["beta"] = rng.standard_normal(3)
    check_layer(bn, rng.standard_normal((4, 3, 5)), training=True, rtol=1e-4, atol=1e-6)


def test_batchnorm_eval_gradients():
    rng = np.random.default_rng(0)
    bn = BatchNorm1D(2)
    bn.buffers["running_mean"] = np.array([0.3, -0.2])
    bn.buffers["running_var"] = np.array([2.0, 0.5])
    check_layer(bn, rng.standard_normal((3, 2, 4)), training=False)


def test_batchnorm_updates_running_stats_only_in_training():
    bn = BatchNorm1D(2, momentum=0.5)
    x = np.ones((2, 2, 3)) * 4.0
    bn.forward(x, training=False)
    np.testing.assert_array_equal(bn.buffers["running_mean"], [0.0, 0.0])
    bn.forward(x, training=True)
    np.testing.assert_allclose(bn.buffers["running_mean"], [2.0, 2.0])


def test_lstm_gradients():
    rng = np.random.default_rng(0)
    check_layer(LSTM(3, 4, rng), rng.standard_normal((2, 5, 3)), rtol=1e-4, atol=1e-7)


def test_booster_gradients():
    rng = np.random.default_rng(0)
    booster = Booster(6)
    booster.params["W"] = booster.params["W"] + 0.1 * rng.standard_normal((6, 2, 2))
    booster.params["b"] = 0.1 * rng.standard_normal((6, 2))
    h = rng.standard_normal((2, 3, 6)) + 1j * rng.standard_normal((2, 3, 6))
    re, im = h.real.copy(), h.imag.copy()
    out, cache = booster.forward(h)
    w = rng.standard_normal(out.shape) + 1j * rng.standard_normal(out.shape)

    def loss():
        y = booster.forward(re + 1j * im)[0]
        return float(np.sum(y.real * w.real + y.imag * w.imag))

    booster.zero_grad()
    dh = booster.backward(w, cache)
    np.testing.assert_allclose(dh.real, numeric_grad(loss, re), rtol=1e-5, atol=1e-7)
    np.testing.assert_allclose(dh.imag, numeric_grad(loss, im), rtol=1e-5, atol=1e-7)
    for name, p in booster.params.items():
        np.testing.assert_allclose(booster.grads[name], numeric_grad(loss, p), rtol=1e-5, atol=1e-7)


def test_booster_starts_as_identity():
    h = np.random.default_rng(0).standard_normal((1, 2, 5)) * (1 + 1j)
    np.testing.assert_allclose(Booster(5).forward(h)[0], h)


def test_synthesis_gradients():
    rng = np.random.default_rng(0)
    grid = FrequencyGrid.from_frequencies(5.5e9 + 78_125.0 * np.arange(-4, 4), antennas=3)
    rows = np.stack([rng.uniform(0.2, 2.9, (2, 3)), rng.uniform(2, 20, (2, 3)),
                     rng.uniform(0.1, 0.9, (2, 3)), rng.uniform(-3, 3, (2, 3))], axis=-1)
    h, cache = synthesis_forward(rows, grid)
    G = rng.standard_normal(h.shape) + 1j * rng.standard_normal(h.shape)

    def loss():
        y = synthesis_forward(rows, grid)[0]
        return float(np.sum(y.real * G.real + y.imag * G.imag))

    np.testing.assert_allclose(synthesis_backward(G, cache, grid), numeric_grad(loss, rows),
                               rtol=1e-4, atol=1e-6)


# ============ LATENT AND LOSS ============

def test_poe_gradients():
    rng = np.random.default_rng(0)
    mus = [rng.standard_normal((2, 3)) for _ in range(3)]
    lvs = [rng.uniform(-1, 1, (2, 3)) for _ in range(3)]
    wm, ws = rng.standard_normal((2, 3)), rng.standard_normal((2, 3))

    def loss():
        mu, sigma, _ = poe_forward(mus, lvs)
        return float(np.sum(mu * wm + sigma * ws))

    _, _, cache = poe_forward(mus, lvs)
    dmus, dlvs = poe_backward(wm, ws, cache)
    for k in range(3):
        np.testing.assert_allclose(dmus[k], numeric_grad(loss, mus[k]), rtol=1e-5, atol=1e-8)
        np.testing.assert_allclose(dlvs[k], numeric_grad(loss, lvs[k]), rtol=1e-5, atol=1e-8)


def test_loss_gradients():
    rng = np.random.default_rng(0)
    cfg = ModelConfig(alpha=1.0, eta=0.5, beta=0.1)
    shape_h = (2, 3, 2, 4)
    pred_h = rng.standard_normal(shape_h) + 1j * rng.standard_normal(shape_h)
    gt_h = rng.standard_normal(shape_h) + 1j * rng.standard_normal(shape_h)
    pred_f = rng.standard_normal((2, 3, 5, 4))
    gt_f = rng.standard_normal((2, 3, 5, 4))
    gt_amp = rng.uniform(0, 1, (2, 3, 5))
    mu = rng.standard_normal((3, 6))
    sigma = rng.uniform(0.3, 2.0, (3, 6))
    _, grads = clcp_loss(pred_h, gt_h, pred_f, gt_f, gt_amp, mu, sigma, cfg)

    def total():
        return clcp_loss(pred_h, gt_h, pred_f, gt_f, gt_amp, mu, sigma, cfg)[0].total

    re = pred_h.real.copy()

    def total_re():
        return clcp_loss(re + 1j * pred_h.imag, gt_h, pred_f, gt_f, gt_amp, mu, sigma, cfg)[0].total

    np.testing.assert_allclose(grads["h"].real, numeric_grad(total_re, re), rtol=1e-5, atol=1e-8)
    np.testing.assert_allclose(grads["feats"], numeric_grad(total, pred_f), rtol=1e-5, atol=1e-8)
    np.testing.assert_allclose(grads["mu"], numeric_grad(total, mu), rtol=1e-5, atol=1e-8)
    np.testing.assert_allclose(grads["sigma"], numeric_grad(total, sigma), rtol=1e-5, atol=1e-8)


def test_loss_ignores_padded_paths():
    cfg = ModelConfig()
    h = np.ones((1, 2, 1, 3), dtype=complex)
    pred_f = np.zeros((1, 2, 4, 4))
    gt_f = np.ones((1, 2, 4, 4))
    terms, _ = clcp_loss(h, h, pred_f, gt_f, np.zeros((1, 2, 4)), np.zeros((2, 3)), np.ones((2, 3)), cfg)
    assert terms.csi == 0.0
    assert terms.param == 0.0
    assert terms.kl == pytest.approx(0.0)


def test_path_term_is_amplitude_weighted_distance():
    cfg = ModelConfig(alpha=0.0, eta=1.0, beta=0.0)
    h = np.zeros((1, 1, 1, 2), dtype=complex)
    gt_f = np.zeros((1, 1, 2, 4))
    pred_f = np.zeros((1, 1, 2, 4))
    pred_f[0, 0, 0, :2] = (3.0, 4.0)
    amp = np.array([[[0.5, 0.9]]])
    terms, grads = clcp_loss(h, h, pred_f, gt_f, amp, np.zeros((1, 2)), np.ones((1, 2)), cfg)
    assert terms.param == pytest.approx(0.5 * 5.0)
    np.testing.assert_allclose(grads["feats"][0, 0, 0], [0.3, 0.4, 0.0, 0.0])
    np.testing.assert_array_equal(grads["feats"][0, 0, 1], 0.0)


def test_loss_rejects_shape_mismatch():
    cfg = ModelConfig()
    with pytest.raises(ValueError):
        clcp_loss(np.zeros((1, 2, 1, 3)), np.zeros((1, 2, 1, 4)), np.zeros((1, 2, 4, 4)),
                  np.zeros((1, 2, 4, 4)), np.zeros((1, 2, 4)), np.zeros((2, 3)), np.ones((2, 3)), cfg)
