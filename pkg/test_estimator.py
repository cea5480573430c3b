"""
Tests for path extraction and the reference predictors built on it.
"""

import numpy as np
import pytest

from app.baselines import predict_fullband_crossband, predict_last_known
from app.channel.csi import FrequencyGrid, PathSet, synthesize_csi, zero_csi
from app.errors import DataError
from app.estimator import estimate_paths, estimate_with_trace, residual_power, search_grid
from app.phy.metrics import evm
from app.schemas import EstimatorConfig

CFG = EstimatorConfig(max_delay_m=60.0)
GRID = FrequencyGrid.for_bandwidth(20, antennas=4)


def on_grid_path(theta_idx: int = 30, delay_idx: int = 3, a: float = 0.5, phi: float = 0.7):
    thetas, delays = search_grid(CFG, GRID)
    return float(thetas[theta_idx]), float(delays[delay_idx]), a, phi


def test_search_grid_covers_half_circle():
    thetas, delays = search_grid(CFG, GRID)
    assert thetas[0] == 0.0
    assert thetas[-1] == pytest.approx(np.pi)
    assert delays[1] == pytest.approx(299_792_458 / (2 * 20e6))
    assert delays[-1] <= CFG.max_delay_m + delays[1]


def test_single_on_grid_path_is_recovered():
    theta, d, a, phi = on_grid_path()
    csi = synthesize_csi(PathSet([(theta, d, a, phi)]), GRID)
    ps, trace = estimate_with_trace(csi, CFG)
    assert len(ps) == 1
    assert ps[0].theta == pytest.approx(theta, abs=1e-4)
    assert ps[0].d == pytest.approx(d, abs=1e-4)
    assert ps[0].a == pytest.approx(a, abs=1e-4)
    assert ps[0].phi == pytest.approx(phi, abs=1e-4)
    assert trace.refined < 1e-10


def test_two_off_grid_paths_are_refined():
    truth = PathSet([(0.7, 9.3, 0.6, 0.4), (2.0, 21.0, 0.3, -1.2)])
    csi = synthesize_csi(truth, GRID)
    ps = estimate_paths(csi, CFG.model_copy(update={"l_max": 2}))
    assert residual_power(csi, ps) < 1e-3
    assert ps[0].theta == pytest.approx(0.7, abs=0.05)
    assert ps[0].d == pytest.approx(9.3, abs=0.5)
    assert ps[0].a == pytest.approx(0.6, abs=0.05)


def test_refinement_never_increases_residual():
    truth = PathSet([(0.7, 9.3, 0.6, 0.4), (2.0, 21.0, 0.3, -1.2)])
    _, trace = estimate_with_trace(synthesize_csi(truth, GRID), CFG.model_copy(update={"l_max": 2}))
    assert trace.refined <= trace.greedy[-1] + 1e-12


def test_gains_above_one_are_clamped_and_counted():
    theta, d, a, phi = on_grid_path(a=0.5)
    csi = synthesize_csi(PathSet([(theta, d, a, phi)]), GRID)
    ps, trace = estimate_with_trace(csi.with_values(csi.values * 3.0), CFG)
    assert trace.clamped == 1
    assert ps[0].a == 1.0
    assert ps[0].theta == pytest.approx(theta, abs=1e-4)
    _, unscaled = estimate_with_trace(csi, CFG)
    assert unscaled.clamped == 0


def test_empty_observation_is_rejected():
    theta, d, a, phi = on_grid_path()
    csi = synthesize_csi(PathSet([(theta, d, a, phi)]), GRID)
    with pytest.raises(ValueError):
        estimate_paths(csi.masked(np.zeros(GRID.subcarriers, dtype=bool)), CFG)


def test_zero_channel_has_no_paths():
    ps, trace = estimate_with_trace(zero_csi(GRID), CFG)
    assert len(ps) == 0
    assert trace.refined == 0.0
    with pytest.raises(DataError):
        residual_power(zero_csi(GRID), ps)


# ============ REFERENCE PREDICTORS ============

def test_crossband_extrapolates_single_path_from_one_ru():
    theta, d, a, phi = on_grid_path()
    truth = synthesize_csi(PathSet([(theta, d, a, phi)]), GRID)
    mask = np.zeros(GRID.subcarriers, dtype=bool)
    mask[100:126] = True
    pred = predict_fullband_crossband(truth.masked(mask), GRID, CFG)
    assert pred.is_full_band
    assert evm(pred, truth) < -30.0


def test_crossband_needs_an_observed_ru():
    truth = synthesize_csi(PathSet([on_grid_path()]), GRID)
    with pytest.raises(ValueError):
        predict_fullband_crossband(truth.masked(np.zeros(GRID.subcarriers, dtype=bool)), GRID, CFG)


def test_last_known_reports_staleness():
    entry = synthesize_csi(PathSet([on_grid_path()]), GRID, timestamp_us=1_000)
    stale = predict_last_known(entry, 16_000)
    assert stale.stale_age_us == 15_000
    np.testing.assert_array_equal(stale.values, entry.values)
    stale.values[0, 0] = 0
    assert entry.values[0, 0] != 0


def test_last_known_without_cache():
    with pytest.raises(LookupError):
        predict_last_known(None, 0)
