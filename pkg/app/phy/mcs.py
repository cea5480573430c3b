"""
MCS table loading and threshold calibration.

Coding is modelled as an SNR gain per coding rate applied before the uncoded
BER curve; a packet of L bits fails with probability 1 - (1 - BER)^L.
"""

from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Tuple, Union

import numpy as np
from cachetools import cached
from scipy.optimize import brentq

from app.errors import DataError
from app.phy.ber import BITS_PER_SYMBOL, uncoded_ber
from app.schemas import Modulation

DEFAULT_TABLE = Path(__file__).resolve().parent.parent / "data" / "mcs_table.txt"

CODING_GAIN_DB = {
    Fraction(1, 2): 5.0,
    Fraction(2, 3): 4.0,
    Fraction(3, 4): 3.0,
    Fraction(5, 6): 2.5,
}
PER_TARGET = 1e-2
CALIBRATION_BITS = 1500 * 8
SYMBOL_US = 13.6  # 12.8 us DFT + 0.8 us guard interval


@dataclass(frozen=True)
class McsEntry:
    index: int
    modulation: Modulation
    coding_rate: Fraction
    threshold_db: float

    @property
    def bits(self) -> int:
        return BITS_PER_SYMBOL[self.modulation]

    @property
    def data_bits(self) -> float:
        """Information bits per data subcarrier per symbol."""
        return float(self.bits * self.coding_rate)

    @property
    def coding_gain_db(self) -> float:
        return CODING_GAIN_DB[self.coding_rate]


def coded_ber(modulation: Modulation, coding_rate: Fraction, snr):
    gain = 10 ** (CODING_GAIN_DB[coding_rate] / 10)
    return uncoded_ber(modulation, np.asarray(snr, dtype=float) * gain)


def per_from_ber(ber: float, length_bits: int) -> float:
    if length_bits <= 0:
        raise ValueError(f"packet length must be positive, got {length_bits}")
    ber = float(np.clip(ber, 0.0, 1.0))
    if ber >= 1.0:
        return 1.0
    return float(-np.expm1(length_bits * np.log1p(-ber)))


def calibrate_threshold(modulation: Modulation, coding_rate: Fraction,
                        target: float = PER_TARGET, length_bits: int = CALIBRATION_BITS) -> float:
    """Smallest flat-channel SNR (dB) whose PER meets ``target``."""
    def excess(snr_db: float) -> float:
        ber = float(coded_ber(modulation, coding_rate, 10 ** (snr_db / 10)))
        return per_from_ber(ber, length_bits) - target

    return float(brentq(excess, -20.0, 80.0, xtol=1e-6))


def _parse_rate(text: str) -> Fraction:
    rate = Fraction(text)
    if rate not in CODING_GAIN_DB:
        raise DataError(f"unsupported coding rate {text}")
    return rate


@cached(cache={}, key=lambda path=DEFAULT_TABLE: str(path))
def load_mcs_table(path: Union[str, Path] = DEFAULT_TABLE) -> Tuple[McsEntry, ...]:
    entries = []
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise DataError(f"cannot read MCS table {path}: {e}") from e
    for line in lines:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            index, modulation, rate, threshold = line.split()
            mod = Modulation(modulation)
            coding = _parse_rate(rate)
            thr = calibrate_threshold(mod, coding) if threshold == "calibrate" else float(threshold)
            entries.append(McsEntry(int(index), mod, coding, thr))
        except ValueError as e:
            raise DataError(f"bad MCS table row {line!r}: {e}") from e

    if [e.index for e in entries] != list(range(len(entries))):
        raise DataError("MCS indices must run 0..N-1 in order")
    for prev, cur in zip(entries, entries[1:]):
        if cur.threshold_db <= prev.threshold_db:
            raise DataError(f"MCS {cur.index}: thresholds must strictly increase")
        if cur.data_bits <= prev.data_bits:
            raise DataError(f"MCS {cur.index}: rates must strictly increase")
    return tuple(entries)


def mcs_entry(index: int) -> McsEntry:
    table = load_mcs_table()
    if not 0 <= index < len(table):
        raise IndexError(f"MCS index out of range: {index}")
    return table[index]


def phy_rate_bps(data_tones: int, mcs: int) -> float:
    """Rate of one spatial stream over ``data_tones`` subcarriers."""
    return data_tones * mcs_entry(mcs).data_bits / (SYMBOL_US * 1e-6)
