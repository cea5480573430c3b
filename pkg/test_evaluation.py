"""
Tests for the evaluation helpers behind ``clcp bench`` and ``clcp report``.
"""

import numpy as np
import pytest

from app.channel.csi import Csi, FrequencyGrid
from app.channel.environment import build_environment
from app.evaluation import (
    capacity_fidelity, detection_ber_sweep, evm_by_observed_views, evm_rows, overhead_fraction,
    per_distribution, rate_distribution, summary_rows, twt_rows, window_rows,
)
from app.model.dataset import build_dataset
from app.model.network import ClcpModel
from app.schemas import (
    EnvironmentConfig, EvmRecord, Mode, ModelConfig, PerRecord, SimConfig, SimMetrics, UserSpec, WindowRecord,
)
from app.sra.ru_tree import build_ru_tree


def metrics(mode, throughput, seed=0, evm=(), wakes=None):
    wakes = wakes or {0: 2, 1: 4}
    return SimMetrics(
        mode=mode, seed=seed, users=2, bandwidth_mhz=20, duration_us=1_000_000, throughput_bps=throughput,
        windows=[WindowRecord(window_start_ms=0.0, throughput_bps=throughput, sounding_fraction=0.1),
                 WindowRecord(window_start_ms=500.0, throughput_bps=throughput, sounding_fraction=0.2)],
        offered_bytes={0: 10, 1: 10}, delivered_bytes={0: 10, 1: 9},
        airtime_us={"sounding": 1, "control": 1, "data": 1, "sifs": 1, "idle": 999_996},
        sounding_fraction=0.15,
        wake_counts=wakes, sleep_fractions={0: 0.9, 1: 0.8}, energy_j={0: 1e-3, 1: 2e-3},
        evm_records=[EvmRecord(time_us=0, link=0, evm_db=v, source="pred") for v in evm],
        per_records=[PerRecord(time_us=5, user=1, mcs=7, rate_bps=70e6, per=0.01, mpdus=3, delivered=3)],
    )


# ============ REPORT TABLES ============

def test_ratio_against_baseline():
    rows = {r["mode"]: r for r in summary_rows([metrics(Mode.BASELINE, 10e6), metrics(Mode.CLCP, 25e6)])}
    assert rows["baseline"]["ratio_vs_baseline"] == 1.0
    assert rows["clcp"]["ratio_vs_baseline"] == pytest.approx(2.5)
    assert rows["clcp"]["mean_wakes"] == 3.0
    assert rows["clcp"]["mean_sleep_fraction"] == pytest.approx(0.85)


def test_single_run_is_its_own_reference():
    rows = summary_rows([metrics(Mode.ORACLE, 7e6)])
    assert rows[0]["ratio_vs_oracle"] == 1.0


def test_identical_runs_give_identical_rows():
    a = summary_rows([metrics(Mode.CLCP, 3e6)])
    b = summary_rows([metrics(Mode.CLCP, 3e6)])
    assert a == b


def test_means_over_seeds():
    rows = summary_rows([metrics(Mode.BASELINE, 10e6, seed=0), metrics(Mode.BASELINE, 20e6, seed=1)])
    assert rows[0]["runs"] == 2
    assert rows[0]["throughput_bps"] == pytest.approx(15e6)


def test_empty_report():
    with pytest.raises(ValueError):
        summary_rows([])


def test_evm_quantiles():
    rows = evm_rows([metrics(Mode.CLCP, 1e6, evm=[-30.0, -20.0, -10.0]), metrics(Mode.ORACLE, 1e6)])
    by_mode = {r["mode"]: r for r in rows}
    assert by_mode["clcp"]["count"] == 3
    assert by_mode["clcp"]["p50_db"] == pytest.approx(-20.0)
    assert np.isnan(by_mode["oracle"]["p50_db"])


def test_flat_rows():
    runs = [metrics(Mode.BASELINE, 1e6), metrics(Mode.CLCP, 2e6)]
    assert len(window_rows(runs)) == 4
    twt = twt_rows(runs)
    assert [(r["mode"], r["user"], r["wakes"]) for r in twt[:2]] == [("baseline", 0, 2), ("baseline", 1, 4)]
    per = per_distribution(runs[0])
    assert per == [{"mode": "baseline", "seed": 0, "time_us": 5, "user": 1, "mcs": 7, "per": 0.01,
                    "mpdus": 3, "delivered": 3}]
    assert rate_distribution(runs[0])[0]["rate_bps"] == 70e6


# ============ OVERHEAD ============

def test_overhead_at_400_users():
    cfg = SimConfig(bandwidth_mhz=160)
    assert overhead_fraction(Mode.BASELINE, 400, None, cfg) > 0.4
    assert overhead_fraction(Mode.CLCP, 400, None, cfg) == 0.0
    assert 0.0 < overhead_fraction(Mode.CLCP, 400, None, cfg, pilot_users=10) < \
        overhead_fraction(Mode.BASELINE, 400, None, cfg)


def test_overhead_grows_with_tones():
    cfg = SimConfig()
    assert overhead_fraction(Mode.BASELINE, 16, 2048, cfg) > overhead_fraction(Mode.BASELINE, 16, 256, cfg)


# ============ DETECTION ============

def test_detection_rows():
    rows = detection_ber_sweep([0.0, 10.0], 400, seed=2)
    assert len(rows) == 6
    assert all(0.0 <= r["ber"] <= 1.0 and r["bits"] > 0 for r in rows)
    assert rows == detection_ber_sweep([0.0, 10.0], 400, seed=2)


# ============ PREDICTION QUALITY ============

def random_csis(n, seed):
    rng = np.random.default_rng(seed)
    grid = FrequencyGrid.for_bandwidth(20, antennas=1)
    return {u: Csi(rng.standard_normal((1, 256)) + 1j * rng.standard_normal((1, 256)),
                   grid.wavelengths, grid.antenna_spacing) for u in range(n)}


def test_fidelity_of_perfect_prediction():
    truth = random_csis(3, 0)
    tree = build_ru_tree(20)
    score = capacity_fidelity(truth, truth, {u: 10_000_000 for u in truth}, tree, 0.01)
    assert score == pytest.approx(1.0)


def test_fidelity_of_noisy_prediction_is_at_most_one():
    truth = random_csis(3, 1)
    noisy = {u: Csi(c.values + 0.7 * random_csis(1, 10 + u)[0].values, c.wavelengths, c.antenna_spacing)
             for u, c in truth.items()}
    score = capacity_fidelity(noisy, truth, {u: 10_000_000 for u in truth}, build_ru_tree(20), 0.01)
    assert 0.0 < score <= 1.0 + 1e-9


def test_fidelity_needs_matching_links():
    truth = random_csis(2, 2)
    with pytest.raises(ValueError):
        capacity_fidelity({0: truth[0]}, truth, {0: 1, 1: 1}, build_ru_tree(20), 0.01)


def test_evm_by_views_covers_every_count():
    env = build_environment(EnvironmentConfig(
        seed=5, ap_antennas=2, max_paths=3, n_reflectors=1, static_paths_per_link=1,
        users=[UserSpec(id=0, position=(3.0, 4.0, 1.0)), UserSpec(id=1, position=(4.0, 4.5, 1.0))],
    ))
    grid = FrequencyGrid.for_bandwidth(20, antennas=2)
    dataset = build_dataset(env, grid, 3, 0.01, max_paths=3)
    model = ClcpModel([0, 1], grid, ModelConfig(latent_dim=4, lstm_hidden=8, conv_channels=(4, 4),
                                                fc_hidden=8, max_paths=3))
    scores = evm_by_observed_views(model, dataset)
    assert sorted(scores) == [1, 2]
    assert all(np.isfinite(v) for v in scores.values())
    with pytest.raises(ValueError):
        evm_by_observed_views(model, dataset, views=np.zeros((1, 2, 3, 4)))
