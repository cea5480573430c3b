"""
Per-link encoders and decoders joined through a product-of-experts latent.

Encoder: path sequence -> LSTM -> 2 x (conv + batch norm + ReLU) -> dense ->
ReLU -> (mu, log-variance) heads.
Decoder: the same stack in reverse, ending in one 4-tuple per path slot,
multipath synthesis over the frequency grid and a per-subcarrier affine
"booster" on (real, imag).
"""

from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from app.channel.csi import Csi, FrequencyGrid, PathSet, path_terms
from app.errors import DataError
from app.model.gaussian import LatentGaussian, combine_poe
from app.model.layers import LSTM, BatchNorm1D, Conv1D, Dense, Layer, ReLU
from app.schemas import ModelConfig

LOGVAR_CLIP = 20.0


# ---------------------------
# FEATURES
# ---------------------------

def features_from_rows(rows: np.ndarray, distance_scale: float) -> np.ndarray:
    """(theta, d, a, phi) rows -> network features in roughly unit range."""
    rows = np.asarray(rows, dtype=float)
    return np.stack([rows[..., 0] / np.pi, rows[..., 1] / distance_scale,
                     rows[..., 2], rows[..., 3] / np.pi], axis=-1)


def padded_rows(ps: PathSet, max_paths: int) -> np.ndarray:
    rows = np.zeros((max_paths, 4))
    arr = ps.as_array()[:max_paths]
    rows[:len(arr)] = arr
    return rows


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _softplus(x):
    return np.logaddexp(0.0, x)


# ---------------------------
# SYNTHESIS + BOOSTER
# ---------------------------

def synthesis_forward(rows: np.ndarray, grid: FrequencyGrid) -> Tuple[np.ndarray, Tuple]:
    """Batched multipath synthesis: rows (B, L, 4) -> channels (B, M, S)."""
    terms = path_terms(rows[..., 0], rows[..., 1], rows[..., 3], grid)  # (B, L, M, S)
    h = np.einsum("bl,blms->bms", rows[..., 2], terms)
    return h, (rows, terms)


def synthesis_backward(G: np.ndarray, cache: Tuple, grid: FrequencyGrid) -> np.ndarray:
    """``G`` is dLoss/dRe(h) + j dLoss/dIm(h); returns dLoss/d(rows)."""
    rows, terms = cache
    a = rows[..., 2]
    q = np.conj(G)[:, None] * terms
    re, im = q.real, q.imag
    two_pi_inv_lam = 2 * np.pi / grid.wavelengths
    ant = np.arange(grid.antennas) * grid.antenna_spacing
    d_rows = np.zeros_like(rows)
    d_rows[..., 2] = re.sum(axis=(2, 3))
    d_rows[..., 3] = -a * im.sum(axis=(2, 3))
    d_rows[..., 1] = a * np.einsum("blms,s->bl", im, two_pi_inv_lam)
    d_rows[..., 0] = -a * np.sin(rows[..., 0]) * np.einsum("blms,m,s->bl", im, ant, two_pi_inv_lam)
    return d_rows


class Booster(Layer):
    """Per-subcarrier 2x2 real affine map on (Re h, Im h), identity at init."""

    def __init__(self, subcarriers: int):
        super().__init__()
        self.params["W"] = np.tile(np.eye(2), (subcarriers, 1, 1))
        self.params["b"] = np.zeros((subcarriers, 2))
        self.zero_grad()

    def forward(self, h, training=False):
        if h.shape[-1] != self.params["W"].shape[0]:
            raise DataError(f"booster trained for {self.params['W'].shape[0]} subcarriers, got {h.shape[-1]}")
        x = np.stack([h.real, h.imag], axis=-1)  # (B, M, S, 2)
        y = np.einsum("sij,bmsj->bmsi", self.params["W"], x) + self.params["b"]
        return y[..., 0] + 1j * y[..., 1], x

    def backward(self, G, cache):
        x = cache
        dy = np.stack([G.real, G.imag], axis=-1)
        self._accumulate("W", np.einsum("bmsi,bmsj->sij", dy, x))
        self._accumulate("b", dy.sum(axis=(0, 1)))
        dx = np.einsum("sij,bmsi->bmsj", self.params["W"], dy)
        return dx[..., 0] + 1j * dx[..., 1]


# ---------------------------
# ENCODER / DECODER
# ---------------------------

class _Stack:
    layers: Dict[str, Layer]

    def named_layers(self) -> Iterator[Tuple[str, Layer]]:
        return iter(self.layers.items())

    def zero_grad(self) -> None:
        for layer in self.layers.values():
            layer.zero_grad()


class Encoder(_Stack):
    def __init__(self, cfg: ModelConfig, rng: np.random.Generator):
        c1, c2 = cfg.conv_channels
        self.layers = {
            "lstm": LSTM(4, cfg.lstm_hidden, rng),
            "conv1": Conv1D(cfg.lstm_hidden, c1, cfg.kernel_size, rng),
            "bn1": BatchNorm1D(c1, cfg.bn_momentum),
            "relu1": ReLU(),
            "conv2": Conv1D(c1, c2, cfg.kernel_size, rng),
            "bn2": BatchNorm1D(c2, cfg.bn_momentum),
            "relu2": ReLU(),
            "fc": Dense(c2 * cfg.max_paths, cfg.fc_hidden, rng),
            "relu3": ReLU(),
            "mu": Dense(cfg.fc_hidden, cfg.latent_dim, rng, zero=True),
            "logvar": Dense(cfg.fc_hidden, cfg.latent_dim, rng, zero=True),
        }

    def forward(self, x: np.ndarray, training: bool = False):
        """x: (B, L, 4) path features -> (mu, logvar, cache)."""
        L = self.layers
        caches = {}
        h, caches["lstm"] = L["lstm"].forward(x, training)
        h = h.transpose(0, 2, 1)
        for name in ("conv1", "bn1", "relu1", "conv2", "bn2", "relu2"):
            h, caches[name] = L[name].forward(h, training)
        flat_shape = h.shape
        h = h.reshape(h.shape[0], -1)
        for name in ("fc", "relu3"):
            h, caches[name] = L[name].forward(h, training)
        mu, caches["mu"] = L["mu"].forward(h, training)
        raw_lv, caches["logvar"] = L["logvar"].forward(h, training)
        logvar = np.clip(raw_lv, -LOGVAR_CLIP, LOGVAR_CLIP)
        return mu, logvar, (caches, flat_shape, np.abs(raw_lv) < LOGVAR_CLIP)

    def backward(self, dmu: np.ndarray, dlogvar: np.ndarray, cache) -> np.ndarray:
        caches, flat_shape, inside = cache
        L = self.layers
        dh = L["mu"].backward(dmu, caches["mu"]) + L["logvar"].backward(dlogvar * inside, caches["logvar"])
        for name in ("relu3", "fc"):
            dh = L[name].backward(dh, caches[name])
        dh = dh.reshape(flat_shape)
        for name in ("relu2", "bn2", "conv2", "relu1", "bn1", "conv1"):
            dh = L[name].backward(dh, caches[name])
        return L["lstm"].backward(dh.transpose(0, 2, 1), caches["lstm"])


class Decoder(_Stack):
    def __init__(self, cfg: ModelConfig, subcarriers: int, rng: np.random.Generator):
        c1, c2 = cfg.conv_channels
        self.max_paths = cfg.max_paths
        self.channels = c2
        self.distance_scale = cfg.distance_scale_m
        self.layers = {
            "fc1": Dense(cfg.latent_dim, cfg.fc_hidden, rng),
            "relu1": ReLU(),
            "fc2": Dense(cfg.fc_hidden, c2 * cfg.max_paths, rng),
            "conv1": Conv1D(c2, c1, cfg.kernel_size, rng),
            "bn1": BatchNorm1D(c1, cfg.bn_momentum),
            "relu2": ReLU(),
            "conv2": Conv1D(c1, c1, cfg.kernel_size, rng),
            "bn2": BatchNorm1D(c1, cfg.bn_momentum),
            "relu3": ReLU(),
            "lstm": LSTM(c1, cfg.lstm_hidden, rng),
            "out": Dense(cfg.lstm_hidden, 4, rng),
            "booster": Booster(subcarriers),
        }

    def forward(self, z: np.ndarray, grid: FrequencyGrid, training: bool = False):
        """z: (B, Z) -> (features (B, L, 4), rows (B, L, 4), h_syn, h_pred, cache)."""
        L = self.layers
        caches = {}
        h = z
        for name in ("fc1", "relu1", "fc2"):
            h, caches[name] = L[name].forward(h, training)
        h = h.reshape(h.shape[0], self.channels, self.max_paths)
        for name in ("conv1", "bn1", "relu2", "conv2", "bn2", "relu3"):
            h, caches[name] = L[name].forward(h, training)
        h, caches["lstm"] = L["lstm"].forward(h.transpose(0, 2, 1), training)
        raw, caches["out"] = L["out"].forward(h, training)

        s0, s1, s2, t3 = _sigmoid(raw[..., 0]), _sigmoid(raw[..., 1]), _sigmoid(raw[..., 2]), np.tanh(raw[..., 3])
        sp1 = _softplus(raw[..., 1])
        feats = np.stack([s0, sp1, s2, t3], axis=-1)
        rows = np.stack([np.pi * s0, self.distance_scale * sp1, s2, np.pi * t3], axis=-1)
        h_syn, caches["synthesis"] = synthesis_forward(rows, grid)
        h_pred, caches["booster"] = L["booster"].forward(h_syn, training)
        caches["act"] = (s0, s1, s2, t3)
        return feats, rows, h_syn, h_pred, caches

    def backward(self, d_feats: np.ndarray, G: np.ndarray, cache, grid: FrequencyGrid) -> np.ndarray:
        """Gradients w.r.t. normalized features and the boosted channel -> dz."""
        L = self.layers
        G_syn = L["booster"].backward(G, cache["booster"])
        d_rows = synthesis_backward(G_syn, cache["synthesis"], grid)
        s0, s1, s2, t3 = cache["act"]
        # features are rows / (pi, d_scale, 1, pi), so fold both paths onto the features
        d_f = d_feats + d_rows * np.array([np.pi, self.distance_scale, 1.0, np.pi])
        d_raw = np.stack([d_f[..., 0] * s0 * (1 - s0), d_f[..., 1] * s1,
                          d_f[..., 2] * s2 * (1 - s2), d_f[..., 3] * (1 - t3 ** 2)], axis=-1)
        dh = L["out"].backward(d_raw, cache["out"])
        dh = L["lstm"].backward(dh, cache["lstm"]).transpose(0, 2, 1)
        for name in ("relu3", "bn2", "conv2", "relu2", "bn1", "conv1"):
            dh = L[name].backward(dh, cache[name])
        dh = dh.reshape(dh.shape[0], -1)
        for name in ("fc2", "relu1", "fc1"):
            dh = L[name].backward(dh, cache[name])
        return dh


# ---------------------------
# MODEL
# ---------------------------

class ClcpModel:
    """One model per group of nearby links; link ``link_ids[n]`` owns encoder/decoder n."""

    VERSION = "clcp-model/1"

    def __init__(self, link_ids: Sequence[int], grid: FrequencyGrid,
                 cfg: ModelConfig = ModelConfig(), seed: int = 0):
        if not link_ids:
            raise ValueError("a model needs at least one link")
        self.link_ids = [int(u) for u in link_ids]
        self.grid = grid
        self.cfg = cfg
        rng = np.random.default_rng(seed)
        self.encoders = [Encoder(cfg, rng) for _ in self.link_ids]
        self.decoders = [Decoder(cfg, grid.subcarriers, rng) for _ in self.link_ids]

    @property
    def n_links(self) -> int:
        return len(self.link_ids)

    @property
    def latent_dim(self) -> int:
        return self.cfg.latent_dim

    def index_of(self, link_id: int) -> int:
        try:
            return self.link_ids.index(int(link_id))
        except ValueError as e:
            raise KeyError(f"link {link_id} is not in this model's group") from e

    def _check_index(self, index: int) -> None:
        if not 0 <= index < self.n_links:
            raise IndexError(f"no encoder/decoder {index} in a {self.n_links}-link model")

    # ---------- parameters ----------

    def named_layers(self) -> Iterator[Tuple[str, Layer]]:
        for n, enc in enumerate(self.encoders):
            for name, layer in enc.named_layers():
                yield f"encoder{n}.{name}", layer
        for n, dec in enumerate(self.decoders):
            for name, layer in dec.named_layers():
                yield f"decoder{n}.{name}", layer

    def named_parameters(self) -> Iterator[Tuple[str, np.ndarray]]:
        for prefix, layer in self.named_layers():
            for key in sorted(layer.params):
                yield f"{prefix}.{key}", layer.params[key]

    def named_buffers(self) -> Iterator[Tuple[str, np.ndarray]]:
        for prefix, layer in self.named_layers():
            for key in sorted(layer.buffers):
                yield f"{prefix}.{key}", layer.buffers[key]

    def named_grads(self) -> Iterator[Tuple[str, np.ndarray]]:
        for prefix, layer in self.named_layers():
            for key in sorted(layer.params):
                yield f"{prefix}.{key}", layer.grads[key]

    def set_tensor(self, name: str, value: np.ndarray) -> None:
        prefix, key = name.rsplit(".", 1)
        layers = dict(self.named_layers())
        if prefix not in layers:
            raise DataError(f"unknown tensor {name}")
        layer = layers[prefix]
        store = layer.params if key in layer.params else layer.buffers
        if key not in store or store[key].shape != value.shape:
            raise DataError(f"tensor {name} does not match the model layout")
        store[key] = np.array(value, dtype=float)

    def zero_grad(self) -> None:
        for enc in self.encoders:
            enc.zero_grad()
        for dec in self.decoders:
            dec.zero_grad()

    # ---------- inference ----------

    def view_features(self, ps: PathSet) -> np.ndarray:
        return features_from_rows(padded_rows(ps, self.cfg.max_paths), self.cfg.distance_scale_m)

    def encode(self, view: PathSet, encoder_index: int) -> LatentGaussian:
        self._check_index(encoder_index)
        mu, logvar, _ = self.encoders[encoder_index].forward(self.view_features(view)[None], False)
        return LatentGaussian(mu[0], np.exp(0.5 * logvar[0]))

    def decode_detail(self, z: np.ndarray, decoder_index: int) -> Tuple[PathSet, np.ndarray, np.ndarray]:
        """(decoded paths, pre-booster channel, boosted channel) for one latent vector."""
        self._check_index(decoder_index)
        _, rows, h_syn, h_pred, _ = self.decoders[decoder_index].forward(
            np.asarray(z, dtype=float)[None], self.grid, False)
        ps = PathSet.strongest([tuple(r) for r in rows[0] if r[2] > 0], self.cfg.max_paths)
        return ps, h_syn[0], h_pred[0]

    def decode(self, z: np.ndarray, decoder_index: int,
               grid: Optional[FrequencyGrid] = None) -> Tuple[PathSet, Csi]:
        if grid is not None and grid.key() != self.grid.key():
            raise DataError("decoder was trained on a different frequency grid")
        ps, _, h_pred = self.decode_detail(z, decoder_index)
        return ps, Csi(h_pred, self.grid.wavelengths, self.grid.antenna_spacing)

    def predict(self, observed: Dict[int, PathSet], targets: Sequence[int],
                strict: bool = True, timestamp_us: int = 0) -> Dict[int, Csi]:
        """Full-band CSI for every target link from whichever views were observed."""
        if not observed and strict:
            raise ValueError("predict needs at least one observed view")
        experts: List[LatentGaussian] = [self.encode(ps, self.index_of(link)) for link, ps in observed.items()]
        joint = combine_poe(experts, self.latent_dim)
        out = {}
        for link in targets:
            _, csi = self.decode(joint.mu, self.index_of(link))
            csi.timestamp_us = timestamp_us
            out[int(link)] = csi
        return out
