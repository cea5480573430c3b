"""Channel variability: how much per-subcarrier received power moves over time."""

from typing import Optional, Sequence

import numpy as np

from app.channel.csi import FrequencyGrid, synthesize_csi
from app.channel.environment import Environment, advance, paths_for_link


def channel_variability(env: Environment, grid: FrequencyGrid, seconds: float = 2.0,
                        sample_period_s: float = 0.01, measurement_snr_db: float = 40.0,
                        segment_s: float = 1.0, rng: Optional[np.random.Generator] = None,
                        link_ids: Optional[Sequence[int]] = None) -> float:
    """Mean per-subcarrier power variance over ``segment_s`` windows, in dB.

    Power is read on antenna 0 with AWGN at ``measurement_snr_db`` relative to
    each link's initial mean power, so a frozen environment still measures the
    noise floor.
    """
    rng = rng if rng is not None else np.random.default_rng(env.rng_seed)
    ids = list(link_ids) if link_ids is not None else env.link_ids()
    n = int(round(seconds / sample_period_s))
    per_segment = max(int(round(segment_s / sample_period_s)), 2)
    if n < per_segment:
        raise ValueError("need at least one full segment of samples")

    powers = np.empty((len(ids), n, grid.subcarriers))
    noise_var = None
    for t in range(n):
        h = np.stack([synthesize_csi(paths_for_link(env, link), grid).values[0] for link in ids])
        if noise_var is None:
            noise_var = np.mean(np.abs(h) ** 2, axis=1, keepdims=True) / 10 ** (measurement_snr_db / 10)
        noise = np.sqrt(noise_var / 2) * (rng.standard_normal(h.shape) + 1j * rng.standard_normal(h.shape))
        powers[:, t] = np.abs(h + noise) ** 2
        env = advance(env, sample_period_s)

    segments = n // per_segment
    trimmed = powers[:, : segments * per_segment].reshape(len(ids), segments, per_segment, -1)
    return float(10 * np.log10(np.mean(np.var(trimmed, axis=2))))
