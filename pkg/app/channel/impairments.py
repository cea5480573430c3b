"""
Measurement impairments and their compensation.

A measured packet carries three distortions on top of the true channel: a
timing offset (phase slope across subcarriers), a power-control amplitude
offset, and a carrier-frequency phase constant shared by all antennas.
"""

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from app.channel.csi import Csi
from app.errors import DataError
from app.schemas import ImpairmentConfig

MAD_FLOOR_DB = 0.1
POWER_FLOOR = 1e-30


@dataclass(frozen=True)
class RssiSample:
    rssi: float
    packet_index: int

    def __post_init__(self):
        if not np.isfinite(self.rssi):
            raise ValueError(f"RSSI must be finite, got {self.rssi}")


def measure_rssi(csi: Csi, packet_index: int = 0) -> RssiSample:
    power = float(np.mean(np.abs(csi.observed()) ** 2)) if csi.observed_mask.any() else 0.0
    return RssiSample(10 * np.log10(max(power, POWER_FLOOR)), packet_index)


def apply_impairments(csi: Csi, timing_offset_s: float = 0.0, amplitude_db: float = 0.0,
                      cfo_phase: float = 0.0) -> Csi:
    """Deterministic distortion of one packet's CSI."""
    offset_hz = csi.grid.frequencies - csi.grid.center_frequency
    phase = -2 * np.pi * offset_hz * timing_offset_s + cfo_phase
    scale = 10 ** (amplitude_db / 20)
    return csi.with_values(csi.values * scale * np.exp(1j * phase)[None, :])


def inject_impairments(csi: Csi, rng: np.random.Generator,
                       cfg: ImpairmentConfig = ImpairmentConfig(),
                       packet_index: int = 0) -> Tuple[Csi, RssiSample]:
    tau = rng.normal(0.0, cfg.timing_jitter_ns * 1e-9)
    amp = rng.normal(0.0, cfg.amplitude_offset_db)
    cfo = rng.uniform(-cfg.cfo_phase_range_rad, cfg.cfo_phase_range_rad)
    out = apply_impairments(csi, tau, amp, cfo)
    return out, measure_rssi(out, packet_index)


def add_measurement_noise(values: np.ndarray, snr_db: float, rng: np.random.Generator) -> np.ndarray:
    """Complex AWGN at ``snr_db`` below the mean power of ``values``."""
    values = np.asarray(values, dtype=complex)
    power = float(np.mean(np.abs(values) ** 2)) * 10 ** (-snr_db / 10)
    noise = rng.standard_normal(values.shape) + 1j * rng.standard_normal(values.shape)
    return values + np.sqrt(power / 2) * noise


# ---------------------------
# COMPENSATION
# ---------------------------

def rssi_inliers(rssis: Sequence[RssiSample], threshold: float = 3.0,
                 window: int = 10) -> List[bool]:
    """Flags for each sample: within ``threshold`` MADs of the window median."""
    if not rssis:
        return []
    recent = np.array([s.rssi for s in rssis[-window:]])
    median = np.median(recent)
    mad = max(float(np.median(np.abs(recent - median))), MAD_FLOOR_DB)
    return [abs(s.rssi - median) <= threshold * mad for s in rssis]


def average_phase(csis: Sequence[Csi]) -> np.ndarray:
    """Per-subcarrier phase averaged across packets, anchored on the first packet.

    The relative phase of each packet against the first is taken from the
    antenna-summed cross product (common to every antenna), unwrapped along
    frequency and centred so that the middle subcarrier lies in (-pi, pi].
    """
    ref = csis[0].values
    centre = ref.shape[1] // 2
    deltas = []
    for c in csis:
        cross = np.sum(c.values * np.conj(ref), axis=0)
        delta = np.unwrap(np.angle(cross))
        delta -= 2 * np.pi * np.round(delta[centre] / (2 * np.pi))
        deltas.append(delta)
    return np.angle(ref) + np.mean(deltas, axis=0)[None, :]


def remove_common_phase(values: np.ndarray) -> np.ndarray:
    return values * np.exp(-1j * np.angle(values[0]))[None, :]


def compensate(csis: Sequence[Csi], rssis: Sequence[RssiSample],
               cfg: ImpairmentConfig = ImpairmentConfig()) -> Csi:
    """Combine three sequential packets into one corrected CSI.

    ``rssis`` is the recent RSSI window; its last ``len(csis)`` samples belong to
    ``csis`` in order.
    """
    if len(csis) < 3:
        raise ValueError(f"compensation needs 3 sequential CSIs, got {len(csis)}")
    if len(rssis) < 3:
        raise ValueError(f"compensation needs at least 3 RSSI samples, got {len(rssis)}")
    if len({c.values.shape for c in csis}) != 1:
        raise DataError("CSI shapes differ across packets")

    flags = rssi_inliers(list(rssis), cfg.mad_threshold, cfg.rssi_window)
    own = flags[-len(csis):] if len(flags) >= len(csis) else [True] * len(csis)
    kept = [c for c, ok in zip(csis, own) if ok]
    if not kept:
        raise DataError("all packets rejected as RSSI outliers")

    amplitude = np.mean([np.abs(c.values) for c in kept], axis=0)
    combined = amplitude * np.exp(1j * average_phase(kept))
    return csis[-1].with_values(remove_common_phase(combined),
                                observed_mask=csis[0].observed_mask.copy())
