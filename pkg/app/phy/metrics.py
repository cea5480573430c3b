"""Channel-quality metrics on CSI matrices."""

from typing import Union

import numpy as np

from app.channel.csi import Csi

EVM_FLOOR_DB = -100.0

CsiLike = Union[Csi, np.ndarray]


def _values(x: CsiLike) -> np.ndarray:
    return x.values if isinstance(x, Csi) else np.asarray(x, dtype=complex)


def evm(pred: CsiLike, gt: CsiLike) -> float:
    """Error vector magnitude of ``pred`` against ``gt`` in dB, floored at -100 dB."""
    p, g = _values(pred), _values(gt)
    if p.shape != g.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {g.shape}")
    ref = float(np.sum(np.abs(g) ** 2))
    if ref == 0:
        raise ValueError("EVM against a zero ground-truth channel is undefined")
    err = float(np.sum(np.abs(p - g) ** 2))
    if err == 0:
        return EVM_FLOOR_DB
    return max(10 * np.log10(err / ref), EVM_FLOOR_DB)


def snr_per_subcarrier(csi: CsiLike, tx_power: float, noise_power: float) -> np.ndarray:
    if noise_power <= 0:
        raise ValueError("noise power must be positive")
    h = _values(csi)
    return tx_power * np.sum(np.abs(h) ** 2, axis=0) / noise_power


def db_to_linear(db):
    return 10 ** (np.asarray(db, dtype=float) / 10)
