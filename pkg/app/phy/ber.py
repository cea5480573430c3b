"""Gray-coded uncoded BER on AWGN and its inverse, per modulation."""

import numpy as np
from scipy.special import erfc, erfcinv

from app.schemas import Modulation

BITS_PER_SYMBOL = {
    Modulation.BPSK: 1,
    Modulation.QPSK: 2,
    Modulation.QAM16: 4,
    Modulation.QAM64: 6,
    Modulation.QAM256: 8,
    Modulation.QAM1024: 10,
}


def q_function(x):
    return 0.5 * erfc(np.asarray(x, dtype=float) / np.sqrt(2.0))


def q_inverse(p):
    return np.sqrt(2.0) * erfcinv(2.0 * np.asarray(p, dtype=float))


def _qam_coefficient(modulation: Modulation) -> float:
    order = 2 ** BITS_PER_SYMBOL[modulation]
    return 4.0 / np.log2(order) * (1 - 1 / np.sqrt(order))


def uncoded_ber(modulation: Modulation, snr):
    """Bit error probability at symbol SNR ``snr`` (linear)."""
    snr = np.maximum(np.asarray(snr, dtype=float), 0.0)
    if modulation == Modulation.BPSK:
        return q_function(np.sqrt(2 * snr))
    if modulation == Modulation.QPSK:
        return q_function(np.sqrt(snr))
    order = 2 ** BITS_PER_SYMBOL[modulation]
    ber = _qam_coefficient(modulation) * q_function(np.sqrt(3 * snr / (order - 1)))
    return np.minimum(ber, 0.5)


def inverse_ber(modulation: Modulation, ber):
    """SNR (linear) at which ``uncoded_ber`` equals ``ber``; 0 at the BER ceiling."""
    ber = np.asarray(ber, dtype=float)
    if modulation == Modulation.BPSK:
        return q_inverse(np.clip(ber, 0.0, 0.5)) ** 2 / 2
    if modulation == Modulation.QPSK:
        return q_inverse(np.clip(ber, 0.0, 0.5)) ** 2
    order = 2 ** BITS_PER_SYMBOL[modulation]
    arg = np.clip(ber / _qam_coefficient(modulation), 0.0, 0.5)
    return (order - 1) / 3 * q_inverse(arg) ** 2
