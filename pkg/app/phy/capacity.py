"""
Schedule capacity: sum over RUs, subcarriers and assigned users of
log2(1 + SNR), where SNR is the post-equalization SNR of each stream.

A single user gets maximum-ratio combining over the AP antennas; a multi-user
RU uses zero-forcing with the transmit power split equally across streams.
"""

from typing import Mapping, Optional, Sequence

import numpy as np

from app.channel.csi import Csi
from app.errors import DataError
from app.schemas import Schedule
from app.sra.ru_tree import RuTree, build_ru_tree


def capacity_from_snr(snr) -> float:
    return float(np.sum(np.log2(1.0 + np.maximum(np.asarray(snr, dtype=float), 0.0))))


def zf_stream_snr(csis: Sequence[Csi], columns: np.ndarray, tx_power: float,
                  noise_power: float) -> np.ndarray:
    """Per-user, per-subcarrier SNR after zero-forcing; shape (users, len(columns)).

    Returns zeros when the stacked channel is rank deficient on any subcarrier.
    """
    k = len(csis)
    h = np.stack([c.values[:, columns] for c in csis], axis=-1).transpose(1, 0, 2)  # (S, M, K)
    if k == 1:
        gain = np.sum(np.abs(h[:, :, 0]) ** 2, axis=1)
        return (tx_power * gain / noise_power)[None, :]
    if h.shape[1] < k:
        return np.zeros((k, h.shape[0]))
    gram = np.conj(h.transpose(0, 2, 1)) @ h
    try:
        inv = np.linalg.inv(gram)
    except np.linalg.LinAlgError:
        return np.zeros((k, h.shape[0]))
    enhancement = np.real(np.diagonal(inv, axis1=1, axis2=2))  # (S, K)
    if np.any(~np.isfinite(enhancement)) or np.any(enhancement <= 0):
        return np.zeros((k, h.shape[0]))
    return (tx_power / k / (noise_power * enhancement)).T


def mismatched_stream_snr(estimated: Sequence[Csi], actual: Sequence[Csi], columns: np.ndarray,
                          tx_power: float, noise_power: float) -> np.ndarray:
    """Per-stream SINR when the receive filter is built from ``estimated`` CSI
    but the signals travel over the ``actual`` channels; shape (users, len(columns)).

    Equals :func:`zf_stream_snr` when both agree.
    """
    k = len(actual)
    if len(estimated) != k:
        raise ValueError("estimated and actual user counts differ")
    h_est = np.stack([c.values[:, columns] for c in estimated], axis=-1).transpose(1, 0, 2)
    h = np.stack([c.values[:, columns] for c in actual], axis=-1).transpose(1, 0, 2)
    if k == 1:
        w = h_est
    else:
        if h.shape[1] < k:
            return np.zeros((k, h.shape[0]))
        gram = np.conj(h_est.transpose(0, 2, 1)) @ h_est
        try:
            w = h_est @ np.linalg.inv(gram)
        except np.linalg.LinAlgError:
            return np.zeros((k, h.shape[0]))
    coupling = np.abs(np.conj(w.transpose(0, 2, 1)) @ h) ** 2       # (S, K filters, K users)
    signal = np.diagonal(coupling, axis1=1, axis2=2)
    interference = coupling.sum(axis=2) - signal
    w_norm = np.sum(np.abs(w) ** 2, axis=1)
    p = tx_power / k
    denom = p * interference + noise_power * w_norm
    with np.errstate(divide="ignore", invalid="ignore"):
        sinr = np.where(denom > 0, p * signal / denom, 0.0)
    return np.nan_to_num(sinr, nan=0.0, posinf=0.0).T


def su_capacity(csi: Csi, columns: np.ndarray, tx_power: float, noise_power: float) -> float:
    return capacity_from_snr(zf_stream_snr([csi], columns, tx_power, noise_power))


def group_capacity(csis: Sequence[Csi], columns: np.ndarray, tx_power: float,
                   noise_power: float) -> float:
    return capacity_from_snr(zf_stream_snr(csis, columns, tx_power, noise_power))


def ru_capacity(schedule: Schedule, csis: Mapping[int, Csi], noise_power: float,
                tx_power: float = 1.0, tree: Optional[RuTree] = None) -> float:
    """Capacity (bit/s/Hz summed over subcarriers) of a full schedule."""
    if noise_power <= 0:
        raise ValueError("noise power must be positive")
    if tree is None:
        tree = build_ru_tree(schedule.bandwidth_mhz)
    used = np.zeros(tree.fft_size, dtype=bool)
    seen = set()
    total = 0.0
    for entry in schedule.entries:
        cols = tree.columns(entry.ru.node_id)
        if np.any(used[cols]):
            raise DataError(f"overlapping RUs at {entry.ru.node_id}")
        used[cols] = True
        if seen.intersection(entry.users):
            raise DataError(f"user scheduled on two RUs at {entry.ru.node_id}")
        seen.update(entry.users)
        if entry.users:
            total += group_capacity([csis[u] for u in entry.users], cols, tx_power, noise_power)
    return total
