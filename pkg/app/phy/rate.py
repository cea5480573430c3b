"""
ESNR rate adaptation and the packet error model.

The effective SNR of a frequency-selective channel for a modulation is the flat
SNR that would produce the same mean uncoded BER.
"""

from typing import Optional, Sequence, Union

import numpy as np

from app.channel.csi import Csi
from app.phy.ber import inverse_ber, uncoded_ber
from app.phy.mcs import McsEntry, coded_ber, load_mcs_table, mcs_entry, per_from_ber
from app.phy.metrics import snr_per_subcarrier
from app.schemas import Modulation


def effective_snr(snrs, modulation: Modulation) -> float:
    snrs = np.atleast_1d(np.asarray(snrs, dtype=float))
    if snrs.size == 0:
        raise ValueError("effective SNR needs at least one subcarrier")
    if np.all(np.isinf(snrs)):
        return float("inf")
    if np.all(snrs == snrs[0]):
        return float(snrs[0])
    return float(inverse_ber(modulation, np.mean(uncoded_ber(modulation, snrs))))


def select_mcs_from_snrs(snrs, table: Optional[Sequence[McsEntry]] = None) -> int:
    """Highest MCS whose effective SNR clears its threshold, else 0."""
    table = table or load_mcs_table()
    esnr = {}
    for entry in reversed(table):
        if entry.modulation not in esnr:
            esnr[entry.modulation] = effective_snr(snrs, entry.modulation)
        if esnr[entry.modulation] >= 10 ** (entry.threshold_db / 10):
            return entry.index
    return 0


def select_mcs(csi: Csi, noise_power: float, tx_power: float = 1.0,
               columns: Optional[np.ndarray] = None,
               table: Optional[Sequence[McsEntry]] = None) -> int:
    snrs = snr_per_subcarrier(csi, tx_power, noise_power)
    if columns is not None:
        snrs = snrs[columns]
    return select_mcs_from_snrs(snrs, table)


def packet_error_rate(mcs: Union[int, McsEntry], snrs, length_bits: int) -> float:
    entry = mcs if isinstance(mcs, McsEntry) else mcs_entry(mcs)
    snrs = np.atleast_1d(np.asarray(snrs, dtype=float))
    ber = float(np.mean(coded_ber(entry.modulation, entry.coding_rate, snrs)))
    return per_from_ber(ber, length_bits)
