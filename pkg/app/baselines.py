"""
Reference predictors compared against cross-link prediction.

- cross-band: extract paths from the observed RU, resynthesize the full band
- last-known: reuse the most recent CSI as-is
"""

from dataclasses import replace
from typing import Optional

from app.channel.csi import Csi, FrequencyGrid, synthesize_csi, zero_csi
from app.estimator import estimate_paths
from app.schemas import EstimatorConfig


def predict_fullband_crossband(partial: Csi, grid: Optional[FrequencyGrid] = None,
                               cfg: EstimatorConfig = EstimatorConfig()) -> Csi:
    if not partial.observed_mask.any():
        raise ValueError("cross-band prediction needs an observed RU")
    grid = grid or partial.grid
    ps = estimate_paths(partial, cfg)
    if len(ps) == 0:
        return zero_csi(grid, partial.timestamp_us)
    return synthesize_csi(ps, grid, partial.timestamp_us)


def predict_last_known(entry: Optional[Csi], now_us: int) -> Csi:
    if entry is None:
        raise LookupError("no cached CSI for this link")
    return replace(entry, values=entry.values.copy(),
                   stale_age_us=max(int(now_us) - int(entry.timestamp_us), 0))
