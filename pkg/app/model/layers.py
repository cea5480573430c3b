"""
Layers with hand-written backward passes.

``forward`` returns ``(output, cache)``; ``backward(dout, cache)`` returns the
input gradient and accumulates parameter gradients into ``grads``. Keeping the
cache outside the layer lets one layer run several forwards per step (one per
view subset) and be back-propagated through each of them.
"""

from typing import Any, Dict, List, Tuple

import numpy as np


class Layer:
    def __init__(self):
        self.params: Dict[str, np.ndarray] = {}
        self.grads: Dict[str, np.ndarray] = {}
        self.buffers: Dict[str, np.ndarray] = {}

    def zero_grad(self) -> None:
        self.grads = {k: np.zeros_like(v) for k, v in self.params.items()}

    def _accumulate(self, name: str, g: np.ndarray) -> None:
        if name in self.grads:
            self.grads[name] += g
        else:
            self.grads[name] = g.copy()

    def forward(self, x: np.ndarray, training: bool = False) -> Tuple[np.ndarray, Any]:
        raise NotImplementedError

    def backward(self, dout: np.ndarray, cache: Any) -> np.ndarray:
        raise NotImplementedError


class Dense(Layer):
    """Affine map over the last axis."""

    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator, zero: bool = False):
        super().__init__()
        limit = np.sqrt(6.0 / (n_in + n_out))
        self.params["W"] = np.zeros((n_in, n_out)) if zero else rng.uniform(-limit, limit, (n_in, n_out))
        self.params["b"] = np.zeros(n_out)
        self.zero_grad()

    def forward(self, x, training=False):
        return x @ self.params["W"] + self.params["b"], x

    def backward(self, dout, cache):
        x = cache
        x2 = x.reshape(-1, x.shape[-1])
        d2 = dout.reshape(-1, dout.shape[-1])
        self._accumulate("W", x2.T @ d2)
        self._accumulate("b", d2.sum(axis=0))
        return dout @ self.params["W"].T


class ReLU(Layer):
    def forward(self, x, training=False):
        mask = x > 0
        return x * mask, mask

    def backward(self, dout, cache):
        return dout * cache


class Conv1D(Layer):
    """'Same'-padded 1-D convolution on (batch, channels, length)."""

    def __init__(self, c_in: int, c_out: int, kernel: int, rng: np.random.Generator):
        super().__init__()
        if kernel % 2 == 0:
            raise ValueError("kernel size must be odd")
        limit = np.sqrt(6.0 / (c_in * kernel + c_out * kernel))
        self.params["W"] = rng.uniform(-limit, limit, (c_out, c_in, kernel))
        self.params["b"] = np.zeros(c_out)
        self.zero_grad()

    @property
    def kernel(self) -> int:
        return self.params["W"].shape[2]

    def forward(self, x, training=False):
        pad = self.kernel // 2
        xp = np.pad(x, ((0, 0), (0, 0), (pad, pad)))
        windows = np.lib.stride_tricks.sliding_window_view(xp, self.kernel, axis=2)
        out = np.einsum("bctk,ock->bot", windows, self.params["W"]) + self.params["b"][None, :, None]
        return out, (windows, x.shape)

    def backward(self, dout, cache):
        windows, shape = cache
        self._accumulate("W", np.einsum("bot,bctk->ock", dout, windows))
        self._accumulate("b", dout.sum(axis=(0, 2)))
        dwin = np.einsum("bot,ock->bctk", dout, self.params["W"])
        pad = self.kernel // 2
        length = shape[2]
        dxp = np.zeros((shape[0], shape[1], length + 2 * pad))
        for k in range(self.kernel):
            dxp[:, :, k:k + length] += dwin[..., k]
        return dxp[:, :, pad:pad + length]


class BatchNorm1D(Layer):
    """Per-channel normalization over (batch, length); running stats in eval mode."""

    def __init__(self, channels: int, momentum: float = 0.9, eps: float = 1e-5):
        super().__init__()
        self.momentum = momentum
        self.eps = eps
        self.params["gamma"] = np.ones(channels)
        self.params["beta"] = np.zeros(channels)
        self.buffers["running_mean"] = np.zeros(channels)
        self.buffers["running_var"] = np.ones(channels)
        self.zero_grad()

    def forward(self, x, training=False):
        if training:
            mean = x.mean(axis=(0, 2))
            var = x.var(axis=(0, 2))
            m = self.momentum
            self.buffers["running_mean"] = m * self.buffers["running_mean"] + (1 - m) * mean
            self.buffers["running_var"] = m * self.buffers["running_var"] + (1 - m) * var
        else:
            mean, var = self.buffers["running_mean"], self.buffers["running_var"]
        inv_std = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mean[None, :, None]) * inv_std[None, :, None]
        out = self.params["gamma"][None, :, None] * xhat + self.params["beta"][None, :, None]
        return out, (xhat, inv_std, training)

    def backward(self, dout, cache):
        xhat, inv_std, training = cache
        self._accumulate("gamma", np.sum(dout * xhat, axis=(0, 2)))
        self._accumulate("beta", dout.sum(axis=(0, 2)))
        dxhat = dout * self.params["gamma"][None, :, None]
        if not training:
            return dxhat * inv_std[None, :, None]
        n = xhat.shape[0] * xhat.shape[2]
        s1 = dxhat.sum(axis=(0, 2), keepdims=True)
        s2 = np.sum(dxhat * xhat, axis=(0, 2), keepdims=True)
        return inv_std[None, :, None] / n * (n * dxhat - s1 - xhat * s2)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


class LSTM(Layer):
    """Single-layer LSTM over (batch, time, features); returns every hidden state."""

    def __init__(self, n_in: int, hidden: int, rng: np.random.Generator):
        super().__init__()
        self.hidden = hidden
        limit = 1.0 / np.sqrt(hidden)
        self.params["Wx"] = rng.uniform(-limit, limit, (n_in, 4 * hidden))
        self.params["Wh"] = rng.uniform(-limit, limit, (hidden, 4 * hidden))
        b = np.zeros(4 * hidden)
        b[hidden:2 * hidden] = 1.0  # forget gate
        self.params["b"] = b
        self.zero_grad()

    def forward(self, x, training=False):
        batch, steps, _ = x.shape
        H = self.hidden
        h = np.zeros((batch, H))
        c = np.zeros((batch, H))
        hs = np.zeros((batch, steps, H))
        steps_cache: List[Tuple] = []
        for t in range(steps):
            a = x[:, t] @ self.params["Wx"] + h @ self.params["Wh"] + self.params["b"]
            i = _sigmoid(a[:, :H])
            f = _sigmoid(a[:, H:2 * H])
            o = _sigmoid(a[:, 2 * H:3 * H])
            g = np.tanh(a[:, 3 * H:])
            c_prev, h_prev = c, h
            c = f * c_prev + i * g
            tc = np.tanh(c)
            h = o * tc
            hs[:, t] = h
            steps_cache.append((x[:, t], h_prev, c_prev, i, f, o, g, tc))
        return hs, steps_cache

    def backward(self, dout, cache):
        H = self.hidden
        batch, steps, _ = dout.shape
        dx = np.zeros((batch, steps, self.params["Wx"].shape[0]))
        dWx = np.zeros_like(self.params["Wx"])
        dWh = np.zeros_like(self.params["Wh"])
        db = np.zeros_like(self.params["b"])
        dh_next = np.zeros((batch, H))
        dc_next = np.zeros((batch, H))
        for t in reversed(range(steps)):
            xt, h_prev, c_prev, i, f, o, g, tc = cache[t]
            dh = dout[:, t] + dh_next
            do = dh * tc
            dc = dh * o * (1 - tc ** 2) + dc_next
            di = dc * g
            df = dc * c_prev
            dg = dc * i
            da = np.concatenate([di * i * (1 - i), df * f * (1 - f), do * o * (1 - o), dg * (1 - g ** 2)], axis=1)
            dWx += xt.T @ da
            dWh += h_prev.T @ da
            db += da.sum(axis=0)
            dx[:, t] = da @ self.params["Wx"].T
            dh_next = da @ self.params["Wh"].T
            dc_next = dc * f
        self._accumulate("Wx", dWx)
        self._accumulate("Wh", dWh)
        self._accumulate("b", db)
        return dx
