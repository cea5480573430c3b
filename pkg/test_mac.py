"""
Tests for the uplink MAC: frame sizes and airtime, sounding sequences,
opportunistic observation, TWT accounting, the simulation timeline and its
output files.
"""

import json

import numpy as np
import pytest

from app.channel.csi import Csi, FrequencyGrid
from app.errors import DataError, NoPriorPacket
from app.mac.frames import (
    baseline_sequence, data_exchange, feedback_bits, feedback_load_bps, feedback_payload_bits,
    max_ofdma_users, ofdma_rounds, pilot_sequence, sequence_airtime, sounding_cost,
)
from app.mac.metrics_io import (
    read_event_log, read_metrics, write_event_log, write_metrics_csv, write_metrics_json, metrics_json,
)
from app.mac.observe import fallback_groups, opportunistic_observe, record_packet
from app.mac.simulator import CATEGORIES, simulate
from app.mac.twt import twt_account
from app.schemas import EnvironmentConfig, FrameBudget, MacEvent, Mode, Schedule, ScheduleEntry, SimConfig
from app.sra.ru_tree import build_ru_tree


def small_sim(mode=Mode.BASELINE, **overrides) -> SimConfig:
    fields = dict(mode=mode, user_count=4, duration_ms=100.0, window_ms=50.0, traffic_bps=2e6, seed=1,
                  environment=EnvironmentConfig(seed=3, n_reflectors=1))
    fields.update(overrides)
    return SimConfig(**fields)


# ============ FRAME SIZES ============

def test_feedback_bits_at_160mhz():
    cfg = SimConfig(bandwidth_mhz=160)
    assert feedback_bits(cfg) == 16384
    assert feedback_bits(cfg.model_copy(update={"grouping": 1})) == 4 * 16384


def test_feedback_load_doubles_with_half_period():
    cfg = SimConfig()
    half = cfg.model_copy(update={"feedback_period_ms": cfg.feedback_period_ms / 2})
    assert feedback_load_bps(half) == pytest.approx(2 * feedback_load_bps(cfg))


def test_feedback_payload_rejects_zero_divisors():
    with pytest.raises(ZeroDivisionError):
        feedback_payload_bits(256, 8, 1, 4, 15.0, 0, 15.0)
    with pytest.raises(ZeroDivisionError):
        feedback_payload_bits(256, 8, 1, 4, 15.0, 4, 0.0)


def test_frame_sizes_are_affine_in_users():
    budget = FrameBudget()
    assert budget.tf_bytes(74) == 398
    assert budget.ba_bytes(10) == 72
    assert budget.control_airtime_us(21) == 20 + 28


# ============ SOUNDING ============

def test_ofdma_rounds_respect_ru_count():
    tree = build_ru_tree(160)
    assert max_ofdma_users(tree) == 74
    assert len(ofdma_rounds(list(range(74)), tree)) == 1
    assert [len(r) for r in ofdma_rounds(list(range(75)), tree)] == [74, 1]


def test_baseline_feeds_back_74_users_in_one_round():
    cfg = SimConfig(bandwidth_mhz=160)
    frames = baseline_sequence(range(74), cfg)
    assert sum(f.kind == "feedback" for f in frames) == 1
    assert sum(f.kind == "feedback" for f in baseline_sequence(range(75), cfg)) == 2


def test_sounding_cost_by_mode():
    cfg = SimConfig()
    assert sounding_cost(Mode.ORACLE, 8, cfg).airtime_us == 0
    assert sounding_cost(Mode.CLCP, 8, cfg).airtime_us == 0
    assert sounding_cost(Mode.CLCP, 8, cfg, pilot_users=3).airtime_us == \
        sounding_cost(Mode.CROSSBAND, 3, cfg).airtime_us
    assert 0 < sounding_cost(Mode.CROSSBAND, 8, cfg).airtime_us < sounding_cost(Mode.BASELINE, 8, cfg).airtime_us


def test_baseline_overhead_is_monotone():
    cfg = SimConfig()
    base = sounding_cost(Mode.BASELINE, 8, cfg).airtime_us
    assert sounding_cost(Mode.BASELINE, 16, cfg).airtime_us >= base
    assert sounding_cost(Mode.BASELINE, 8, cfg.model_copy(update={"csi_bits": 16})).airtime_us >= base
    assert sounding_cost(Mode.BASELINE, 8, cfg.model_copy(update={"grouping": 8})).airtime_us <= base
    assert sounding_cost(Mode.BASELINE, 8, cfg, tones=1024).airtime_us >= base


def test_sounding_sequences_are_empty_without_users():
    cfg = SimConfig()
    assert baseline_sequence([], cfg) == []
    assert pilot_sequence([], cfg) == []


def test_pilot_sequence_starts_with_rts_cts():
    frames = pilot_sequence([0, 1], SimConfig())
    assert [f.kind for f in frames[:3]] == ["mu_rts", "sifs", "cts"]
    assert any(f.kind == "pilot" and f.users == (0, 1) and f.tx for f in frames)


def test_data_exchange_needs_duration():
    tree = build_ru_tree(20)
    schedule = Schedule(bandwidth_mhz=20, entries=[ScheduleEntry(ru=tree.ref(tree.root), users=[0])])
    with pytest.raises(ValueError):
        data_exchange(schedule, FrameBudget())
    schedule.t_s = 1e-3
    frames = data_exchange(schedule, FrameBudget())
    assert [f.kind for f in frames] == ["trigger", "sifs", "data", "sifs", "ba"]
    assert frames[2].duration_us - FrameBudget().he_preamble_us in (1000, 1001)
    assert sequence_airtime(frames) == sum(f.duration_us for f in frames)


# ============ OBSERVATION ============

def two_ru_packet():
    tree = build_ru_tree(20)
    grid = FrequencyGrid.for_bandwidth(20, antennas=2)
    rng = np.random.default_rng(0)
    truth = {u: Csi(rng.standard_normal((2, 256)) + 1j * rng.standard_normal((2, 256)),
                    grid.wavelengths, grid.antenna_spacing) for u in range(4)}
    left, right = tree.node(tree.root).children[0], tree.node(tree.root).children[2]
    schedule = Schedule(bandwidth_mhz=20, entries=[ScheduleEntry(ru=tree.ref(left), users=[0]),
                                                   ScheduleEntry(ru=tree.ref(right), users=[2])])
    return tree, truth, schedule, record_packet(schedule, truth, tree, time_us=500)


def test_observed_views_match_their_rus():
    tree, truth, schedule, packet = two_ru_packet()
    assert sorted(packet.observations) == [0, 2]
    for entry in schedule.entries:
        for u in entry.users:
            view = packet.observations[u]
            assert np.flatnonzero(view.observed_mask).tolist() == sorted(tree.columns(entry.ru.node_id).tolist())
            assert view.timestamp_us == 500


def test_unobserved_groups_fall_back():
    *_, packet = two_ru_packet()
    observed = opportunistic_observe(packet, [[0, 1], [3]])
    assert list(observed[0]) == [0]
    assert observed[1] == {}
    assert fallback_groups(observed) == [1]


def test_observation_needs_a_packet():
    with pytest.raises(NoPriorPacket):
        opportunistic_observe(None, [[0]])


def test_measurement_noise_needs_rng():
    tree, truth, schedule, _ = two_ru_packet()
    with pytest.raises(ValueError):
        record_packet(schedule, truth, tree, 0, measurement_snr_db=30.0)


# ============ TWT ============

def test_twt_counts_rounds_with_transmissions():
    events = [
        MacEvent(round=1, time_us=0, duration_us=100, kind="trigger", category="control", users=[0, 1]),
        MacEvent(round=1, time_us=110, duration_us=400, kind="data", category="data", users=[0], tx=True),
        MacEvent(round=2, time_us=600, duration_us=200, kind="data", category="data", users=[0], tx=True),
    ]
    records = twt_account(events, [0, 1, 2], 1000)
    assert records[0].wakes == 2
    assert records[0].awake_us == 700
    assert records[0].sleep_fraction == pytest.approx(0.3)
    assert records[0].energy_j == pytest.approx(600e-6 * 0.135 + 700e-6 * 600e-6)
    assert records[1].wakes == 0 and records[1].awake_us == 100
    assert records[2].wakes == 0 and records[2].sleep_fraction == 1.0
    with pytest.raises(ValueError):
        twt_account(events, [0], 0)


# ============ TIMELINE ============

@pytest.mark.parametrize("mode", [Mode.BASELINE, Mode.CROSSBAND, Mode.ORACLE])
def test_airtime_is_conserved(mode):
    metrics = simulate(small_sim(mode)).metrics
    assert set(metrics.airtime_us) == set(CATEGORIES)
    assert sum(metrics.airtime_us.values()) == metrics.duration_us == 100_000
    assert 0.0 <= metrics.sounding_fraction <= 1.0
    for u, sent in metrics.delivered_bytes.items():
        assert 0 <= sent <= metrics.offered_bytes[u]
    assert all(0.0 <= f <= 1.0 for f in metrics.sleep_fractions.values())
    assert len(metrics.windows) == 2


def test_identical_seeds_give_identical_metrics():
    a = simulate(small_sim()).metrics
    b = simulate(small_sim()).metrics
    assert metrics_json(a) == metrics_json(b)


def test_oracle_delivers_what_is_offered():
    cfg = small_sim(Mode.ORACLE, user_count=1, traffic_bps=1e6, duration_ms=200.0, window_ms=100.0)
    metrics = simulate(cfg).metrics
    offered, delivered = metrics.offered_bytes[0], metrics.delivered_bytes[0]
    assert offered > 0
    assert 0.8 * offered <= delivered <= offered
    assert metrics.sounding_fraction == 0.0


def test_baseline_wakes_every_user_to_sound():
    result = simulate(small_sim())
    feedback = [ev for ev in result.events if ev.kind == "feedback"]
    assert feedback
    assert sorted(feedback[0].users) == [0, 1, 2, 3]
    assert all(w >= len(feedback) for w in result.metrics.wake_counts.values())
    assert result.metrics.sounding_fraction > 0


def test_clcp_with_perfect_predictor_sounds_less_than_baseline():
    baseline = simulate(small_sim()).metrics
    clcp = simulate(small_sim(Mode.CLCP, oracle_predictor=True)).metrics
    assert clcp.airtime_us["sounding"] < baseline.airtime_us["sounding"]


def test_clcp_without_models_is_rejected():
    with pytest.raises(DataError):
        simulate(small_sim(Mode.CLCP))


def test_user_count_must_match_listed_users():
    env = EnvironmentConfig(users=[{"id": 0, "position": (2.0, 3.0, 1.0)}])
    with pytest.raises(DataError):
        simulate(small_sim(user_count=2, environment=env))


# ============ OUTPUT FILES ============

def test_metrics_files_round_trip(tmp_path):
    result = simulate(small_sim(Mode.ORACLE))
    path = tmp_path / "metrics.json"
    write_metrics_json(result.metrics, path)
    assert metrics_json(read_metrics(path)) == path.read_text(encoding="utf-8")

    write_metrics_csv(result.metrics, tmp_path / "metrics.csv")
    lines = (tmp_path / "metrics.csv").read_text().splitlines()
    assert lines[0] == "window_start_ms,mode,throughput_bps,sounding_fraction"
    assert len(lines) == 1 + len(result.metrics.windows)
    assert lines[1].split(",")[1] == "oracle"

    log_path = tmp_path / "events.ndjson"
    write_event_log(result.events, log_path)
    assert read_event_log(log_path) == result.events


def test_read_metrics_rejects_other_schemas(tmp_path):
    other = tmp_path / "other.json"
    other.write_text(json.dumps({"schema": "something-else/1"}))
    with pytest.raises(DataError):
        read_metrics(other)
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(DataError):
        read_metrics(broken)


def test_event_log_rejects_bad_lines(tmp_path):
    path = tmp_path / "events.ndjson"
    path.write_text('{"round": 1, "time_us": 0, "duration_us": 5, "kind": "x", "category": "data"}\n'
                    '{"round": "one"}\n')
    with pytest.raises(DataError):
        read_event_log(path)
