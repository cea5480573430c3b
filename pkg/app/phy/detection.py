"""
Multi-user detection for uplink MU-MIMO: ordered ZF-SIC and MMSE-SIC, and
exhaustive maximum-likelihood search for small constellations.

All detectors work on batches: ``y`` is (n, Nr) and ``H`` is (n, Nr, K).
"""

import itertools
from dataclasses import dataclass
from typing import Dict, Iterable, List, Union

import numpy as np

from app.schemas import DetectionMethod, Modulation
from app.utils.log import get_logger

log = get_logger("DETECT")

ML_MAX_USERS = 4
ML_MAX_ORDER = 16
_ML_CHUNK = 2_000_000
_RANK_FALLBACK_NOISE = 1e-9


@dataclass(frozen=True, eq=False)
class Constellation:
    """Unit-energy Gray-mapped symbol alphabet; ``labels[i]`` are the bits of ``points[i]``."""

    name: str
    points: np.ndarray
    labels: np.ndarray

    @property
    def order(self) -> int:
        return self.points.size

    @property
    def bits(self) -> int:
        return self.labels.shape[1]

    def nearest(self, z: np.ndarray) -> np.ndarray:
        return np.argmin(np.abs(np.asarray(z)[..., None] - self.points) ** 2, axis=-1)


_PAM4 = {(0, 0): -3.0, (0, 1): -1.0, (1, 1): 1.0, (1, 0): 3.0}


def constellation(modulation: Union[str, Modulation]) -> Constellation:
    mod = Modulation(modulation)
    if mod == Modulation.BPSK:
        labels = np.array([[0], [1]], dtype=np.uint8)
        return Constellation(mod.value, 1.0 - 2.0 * labels[:, 0] + 0j, labels)
    if mod == Modulation.QPSK:
        labels = np.array(list(itertools.product((0, 1), repeat=2)), dtype=np.uint8)
        points = ((1 - 2.0 * labels[:, 0]) + 1j * (1 - 2.0 * labels[:, 1])) / np.sqrt(2)
        return Constellation(mod.value, points, labels)
    if mod == Modulation.QAM16:
        labels = np.array(list(itertools.product((0, 1), repeat=4)), dtype=np.uint8)
        points = np.array([_PAM4[(b[0], b[1])] + 1j * _PAM4[(b[2], b[3])] for b in labels]) / np.sqrt(10)
        return Constellation(mod.value, points, labels)
    raise ValueError(f"no detector constellation for {mod.value}")


@dataclass
class DetectionResult:
    indices: np.ndarray
    symbols: np.ndarray

    def bit_errors(self, sent: np.ndarray, const: Constellation) -> int:
        return int(np.sum(const.labels[self.indices] != const.labels[np.asarray(sent)]))


@dataclass
class BerStats:
    errors: int
    bits: int

    @property
    def ber(self) -> float:
        return self.errors / self.bits if self.bits else 0.0

    @property
    def ci95(self) -> float:
        """Half-width of the normal-approximation 95% interval."""
        p = self.ber
        return 1.96 * float(np.sqrt(max(p * (1 - p), 0.0) / self.bits)) if self.bits else 0.0


def _as_batch(y: np.ndarray, H: np.ndarray):
    y = np.asarray(y, dtype=complex)
    H = np.asarray(H, dtype=complex)
    single = y.ndim == 1
    if single:
        y, H = y[None], H[None]
    if H.ndim != 3 or y.shape != H.shape[:2]:
        raise ValueError(f"shape mismatch: y {y.shape}, H {H.shape}")
    return y, H, single


def _sic(y: np.ndarray, H: np.ndarray, const: Constellation, noise_var: float,
         mmse: bool) -> np.ndarray:
    n, _, k = H.shape
    reg = np.full(n, noise_var if mmse else 0.0)
    if not mmse:
        deficient = np.linalg.matrix_rank(H) < k
        if deficient.any():
            log.warning(f"{int(deficient.sum())} rank-deficient channels for ZF - using fallback MMSE")
            reg[deficient] = max(noise_var, _RANK_FALLBACK_NOISE)
    elif noise_var <= 0:
        reg[np.linalg.matrix_rank(H) < k] = _RANK_FALLBACK_NOISE

    rows = np.arange(n)
    eye = np.eye(k)
    active = np.ones((n, k), dtype=bool)
    idx = np.zeros((n, k), dtype=int)
    resid = y.copy()
    for _ in range(k):
        Hm = H * active[:, None, :]
        HmH = np.conj(Hm.transpose(0, 2, 1))
        diag = np.where(active, reg[:, None], 1.0)
        inv = np.linalg.inv(HmH @ Hm + diag[:, :, None] * eye)
        W = inv @ HmH
        # detect the stream with the smallest noise enhancement / MSE first
        score = np.where(active, np.real(np.diagonal(inv, axis1=1, axis2=2)), np.inf)
        best = np.argmin(score, axis=1)
        w = W[rows, best]
        h = H[rows, :, best]
        bias = np.einsum("nr,nr->n", w, h)
        z = np.einsum("nr,nr->n", w, resid) / np.where(np.abs(bias) > 0, bias, 1.0)
        s = const.nearest(z)
        idx[rows, best] = s
        resid = resid - h * const.points[s][:, None]
        active[rows, best] = False
    return idx


def _ml(y: np.ndarray, H: np.ndarray, const: Constellation) -> np.ndarray:
    n, nr, k = H.shape
    if k > ML_MAX_USERS or const.order > ML_MAX_ORDER:
        raise ValueError(f"ML search limited to {ML_MAX_USERS} users and {ML_MAX_ORDER}-point alphabets")
    cands = np.array(list(itertools.product(range(const.order), repeat=k)))
    X = const.points[cands]
    chunk = max(1, _ML_CHUNK // (len(cands) * nr))
    out = np.empty(n, dtype=int)
    for start in range(0, n, chunk):
        sl = slice(start, start + chunk)
        Hx = np.einsum("nrk,ck->ncr", H[sl], X)
        dist = np.sum(np.abs(y[sl, None, :] - Hx) ** 2, axis=2)
        out[sl] = np.argmin(dist, axis=1)
    return cands[out]


def detect_mu(y: np.ndarray, H: np.ndarray, method: Union[str, DetectionMethod],
              const: Union[Constellation, str, Modulation] = Modulation.QPSK,
              noise_var: float = 0.0) -> DetectionResult:
    method = DetectionMethod(method)
    if not isinstance(const, Constellation):
        const = constellation(const)
    yb, Hb, single = _as_batch(y, H)
    if method == DetectionMethod.ML:
        idx = _ml(yb, Hb, const)
    else:
        idx = _sic(yb, Hb, const, noise_var, mmse=method == DetectionMethod.MMSE_SIC)
    if single:
        idx = idx[0]
    return DetectionResult(idx, const.points[idx])


def monte_carlo_ber(method: Union[str, DetectionMethod], snr_db: float, n_symbols: int,
                    rng: np.random.Generator, n_rx: int = 2, n_users: int = 2,
                    modulation: Union[str, Modulation] = Modulation.QPSK) -> BerStats:
    """BER over i.i.d. Rayleigh channels; SNR is per user per receive antenna."""
    const = constellation(modulation)
    noise_var = 10 ** (-snr_db / 10)
    H = (rng.standard_normal((n_symbols, n_rx, n_users))
         + 1j * rng.standard_normal((n_symbols, n_rx, n_users))) / np.sqrt(2)
    sent = rng.integers(0, const.order, size=(n_symbols, n_users))
    noise = np.sqrt(noise_var / 2) * (rng.standard_normal((n_symbols, n_rx))
                                      + 1j * rng.standard_normal((n_symbols, n_rx)))
    y = np.einsum("nrk,nk->nr", H, const.points[sent]) + noise
    result = detect_mu(y, H, method, const, noise_var)
    return BerStats(result.bit_errors(sent, const), sent.size * const.bits)


def ber_sweep(methods: Iterable[Union[str, DetectionMethod]], snrs_db: Iterable[float],
              n_symbols: int, seed: int = 0, n_rx: int = 2, n_users: int = 2,
              modulation: Union[str, Modulation] = Modulation.QPSK) -> Dict[str, List[BerStats]]:
    """BER curves with common random numbers: every method sees the same draws per SNR."""
    snrs = list(snrs_db)
    out: Dict[str, List[BerStats]] = {}
    for method in methods:
        name = DetectionMethod(method).value
        out[name] = [monte_carlo_ber(method, snr, n_symbols, np.random.default_rng([seed, i]),
                                     n_rx, n_users, modulation)
                     for i, snr in enumerate(snrs)]
    return out
