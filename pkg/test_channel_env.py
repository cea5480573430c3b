"""
Tests for the channel environment: grids, path sets, synthesis, motion,
impairment compensation and the binary trace format.
"""

import math

import numpy as np
import pytest

from app.channel.csi import Csi, FrequencyGrid, Path, PathSet, synthesize_csi
from app.channel.environment import (
    advance, build_environment, freeze, link_distances, paths_for_link,
)
from app.channel.impairments import (
    apply_impairments, compensate, measure_rssi, remove_common_phase, rssi_inliers, RssiSample,
)
from app.channel.trace import TraceHeader, read_trace, simulate_trace, write_trace
from app.channel.variability import channel_variability
from app.errors import DataError
from app.schemas import EnvironmentConfig, UserSpec


def small_env(**overrides) -> EnvironmentConfig:
    base = dict(
        seed=3,
        users=[UserSpec(id=0, position=(3.0, 4.0, 1.0)), UserSpec(id=1, position=(4.5, 4.4, 1.0))],
        n_reflectors=2,
    )
    base.update(overrides)
    return EnvironmentConfig(**base)


# ============ GRID AND PATHS ============

@pytest.mark.parametrize("bw,size", [(20, 256), (40, 512), (80, 1024), (160, 2048)])
def test_grid_sizes(bw, size):
    grid = FrequencyGrid.for_bandwidth(bw)
    assert grid.subcarriers == size
    assert np.all(np.diff(grid.wavelengths) < 0)
    assert grid.bandwidth_hz == pytest.approx(size * 78_125.0, rel=1e-6)


def test_grid_rejects_unknown_bandwidth():
    with pytest.raises(ValueError):
        FrequencyGrid.for_bandwidth(30)


def test_pathset_orders_by_attenuation():
    ps = PathSet([(0.5, 3.0, 0.2, 0.0), (1.0, 5.0, 0.7, 1.0), (2.0, 9.0, 0.4, -1.0)])
    assert [p.a for p in ps] == [0.7, 0.4, 0.2]


def test_pathset_validates_ranges():
    with pytest.raises(ValueError):
        PathSet([(4.0, 1.0, 0.5, 0.0)])
    with pytest.raises(ValueError):
        PathSet([(1.0, -1.0, 0.5, 0.0)])
    with pytest.raises(ValueError):
        PathSet([(1.0, 1.0, 0.0, 0.0)])
    with pytest.raises(ValueError):
        PathSet([(1.0, 1.0, 0.5, 0.0)] * 3, capacity=2)


def test_strongest_keeps_capacity():
    ps = PathSet.strongest([(1.0, float(d), 0.1 * d, 0.0) for d in range(1, 10)], capacity=4)
    assert len(ps) == 4
    assert ps[0].a == pytest.approx(0.9)


def test_pathset_csv(tmp_path):
    ps = PathSet([(0.3, 4.0, 0.5, 0.25), (2.0, 7.5, 0.125, -1.0)])
    ps.to_csv(tmp_path / "paths.csv")
    back = PathSet.from_csv(tmp_path / "paths.csv")
    np.testing.assert_array_equal(back.as_array(), ps.as_array())

    (tmp_path / "bad.csv").write_text("theta,d\n1,2\n")
    with pytest.raises(DataError):
        PathSet.from_csv(tmp_path / "bad.csv")


# ============ SYNTHESIS ============

def test_single_path_synthesis_matches_closed_form():
    grid = FrequencyGrid.for_bandwidth(20, antennas=3)
    theta, d, a, phi = 1.1, 6.0, 0.4, 0.3
    csi = synthesize_csi(PathSet([(theta, d, a, phi)]), grid)
    m = np.arange(3)[:, None]
    lam = grid.wavelengths[None, :]
    expected = a * np.exp(1j * (phi - 2 * np.pi * d / lam
                                - 2 * np.pi * m * grid.antenna_spacing * math.cos(theta) / lam))
    np.testing.assert_allclose(csi.values, expected, atol=1e-12)
    np.testing.assert_allclose(np.abs(csi.values), a)


def test_synthesis_is_linear_in_paths():
    grid = FrequencyGrid.for_bandwidth(20)
    p1 = PathSet([(0.4, 5.0, 0.5, 0.1)])
    p2 = PathSet([(2.1, 11.0, 0.2, -2.0)])
    both = synthesize_csi(p1.union(p2), grid).values
    np.testing.assert_allclose(both, synthesize_csi(p1, grid).values + synthesize_csi(p2, grid).values,
                               atol=1e-12)


def test_empty_pathset_cannot_be_synthesized():
    with pytest.raises(ValueError):
        synthesize_csi(PathSet([]), FrequencyGrid.for_bandwidth(20))


def test_csi_rejects_mismatched_mask():
    grid = FrequencyGrid.for_bandwidth(20, antennas=2)
    with pytest.raises(ValueError):
        Csi(np.zeros((2, 256)), grid.wavelengths, grid.antenna_spacing, observed_mask=np.ones(10, bool))


# ============ ENVIRONMENT ============

def test_environment_is_seeded():
    a = build_environment(small_env())
    b = build_environment(small_env())
    assert a.model_dump() == b.model_dump()
    np.testing.assert_array_equal(paths_for_link(a, 1).as_array(), paths_for_link(b, 1).as_array())


def test_link_paths_respect_max_paths():
    env = build_environment(small_env(max_paths=3, n_reflectors=5))
    for link in env.link_ids():
        assert len(paths_for_link(env, link)) == 3


def test_generated_users_stay_in_room():
    cfg = EnvironmentConfig(seed=1, user_count=10, user_layout="random")
    env = build_environment(cfg)
    assert env.link_ids() == list(range(10))
    for u in env.users:
        assert all(lo <= x <= hi for lo, x, hi in zip(cfg.room.lower, u.position, cfg.room.upper))


def test_environment_without_users_fails():
    with pytest.raises(ValueError):
        build_environment(EnvironmentConfig())


def test_unknown_link_raises():
    env = build_environment(small_env())
    with pytest.raises(KeyError):
        paths_for_link(env, 7)


def test_reflectors_bounce_inside_room():
    env = build_environment(small_env(n_reflectors=4, speed_range=(2.0, 3.0)))
    for _ in range(50):
        env = advance(env, 0.5)
    for r in env.moving_reflectors:
        assert all(lo <= x <= hi for lo, x, hi in zip(env.room.lower, r.position, env.room.upper))
    assert env.time_s == pytest.approx(25.0)


def test_advance_requires_positive_step():
    env = build_environment(small_env())
    with pytest.raises(ValueError):
        advance(env, 0.0)


def test_frozen_environment_does_not_move():
    env = freeze(build_environment(small_env()))
    before = paths_for_link(env, 0).as_array()
    after = paths_for_link(advance(env, 1.0), 0).as_array()
    np.testing.assert_allclose(after, before)


def test_link_distances_are_symmetric():
    env = build_environment(small_env())
    dist = link_distances(env)
    assert dist.shape == (2, 2)
    assert dist[0, 1] == pytest.approx(math.hypot(1.5, 0.4))
    np.testing.assert_allclose(dist, dist.T)


def test_moving_reflectors_raise_variability():
    env = build_environment(small_env(ap_antennas=1))
    grid = FrequencyGrid.for_bandwidth(20, antennas=1)
    moving = channel_variability(env, grid, seconds=1.0, sample_period_s=0.01,
                                 rng=np.random.default_rng(0))
    frozen = channel_variability(freeze(env), grid, seconds=1.0, sample_period_s=0.01,
                                 rng=np.random.default_rng(0))
    assert moving > frozen + 3.0


# ============ IMPAIRMENTS ============

def test_compensation_removes_timing_and_cfo():
    grid = FrequencyGrid.for_bandwidth(20, antennas=4)
    truth = synthesize_csi(PathSet([(0.9, 6.0, 0.5, 0.2), (2.2, 14.0, 0.2, -1.0)]), grid)
    packets = [apply_impairments(truth, timing_offset_s=tau, cfo_phase=cfo)
               for tau, cfo in [(10e-9, 0.4), (-25e-9, 2.5), (5e-9, -1.7)]]
    rssis = [measure_rssi(c, i) for i, c in enumerate(packets)]
    out = compensate(packets, rssis)
    np.testing.assert_allclose(out.values, remove_common_phase(truth.values), atol=1e-9)


def test_rssi_outlier_does_not_steer_phase():
    grid = FrequencyGrid.for_bandwidth(20, antennas=4)
    truth = synthesize_csi(PathSet([(0.9, 6.0, 0.5, 0.2), (2.2, 14.0, 0.2, -1.0)]), grid)
    stray = synthesize_csi(PathSet([(2.6, 9.0, 0.5, 1.1)]), grid)
    inliers = [apply_impairments(truth, timing_offset_s=tau, cfo_phase=cfo)
               for tau, cfo in [(10e-9, 0.4), (-25e-9, 2.5), (5e-9, -1.7)]]
    outlier = apply_impairments(stray, amplitude_db=20.0, cfo_phase=1.3)
    history = [measure_rssi(truth, i) for i in range(6)]
    rssis = history + [measure_rssi(c, 6 + i) for i, c in enumerate([outlier] + inliers)]
    assert rssi_inliers(rssis) == [True] * 6 + [False, True, True, True]

    out = compensate([outlier] + inliers, rssis)
    expected = compensate(inliers, history + rssis[7:])
    np.testing.assert_allclose(out.values, expected.values, atol=1e-12)
    np.testing.assert_allclose(out.values, remove_common_phase(truth.values), atol=1e-9)


def test_compensation_needs_three_packets():
    grid = FrequencyGrid.for_bandwidth(20)
    truth = synthesize_csi(PathSet([(0.9, 6.0, 0.5, 0.2)]), grid)
    with pytest.raises(ValueError):
        compensate([truth, truth], [measure_rssi(truth)] * 3)


def test_rssi_outlier_rejected():
    samples = [RssiSample(-40.0 + 0.2 * (i % 3), i) for i in range(9)] + [RssiSample(-20.0, 9)]
    flags = rssi_inliers(samples)
    assert all(flags[:9])
    assert not flags[9]


# ============ TRACE FILES ============

def test_trace_write_and_read(tmp_path):
    env = build_environment(small_env())
    grid = FrequencyGrid.for_bandwidth(20, antennas=env.ap_antennas)
    header = TraceHeader(grid.antennas, grid.subcarriers, 2, 3, 1000)
    write_trace(tmp_path / "t.bin", header, simulate_trace(env, grid, 3, 1000))
    trace = read_trace(tmp_path / "t.bin")
    assert trace.header == header
    assert trace.values.shape == (3, 2, grid.antennas, grid.subcarriers)
    np.testing.assert_array_equal(trace.timestamps_us[:, 0], [0, 1000, 2000])
    first = synthesize_csi(paths_for_link(env, 1), grid).values
    np.testing.assert_allclose(trace.values[0, 1], first, atol=1e-6)


def test_truncated_trace_is_rejected(tmp_path):
    env = build_environment(small_env())
    grid = FrequencyGrid.for_bandwidth(20, antennas=env.ap_antennas)
    header = TraceHeader(grid.antennas, grid.subcarriers, 2, 2, 1000)
    path = tmp_path / "t.bin"
    write_trace(path, header, simulate_trace(env, grid, 2, 1000))
    path.write_bytes(path.read_bytes()[:-7])
    with pytest.raises(DataError):
        read_trace(path)


def test_trace_with_wrong_magic_is_rejected(tmp_path):
    path = tmp_path / "junk.bin"
    path.write_bytes(b"NOTATRACE" * 8)
    with pytest.raises(DataError):
        read_trace(path)


def test_trace_sample_count_must_match_header(tmp_path):
    env = build_environment(small_env())
    grid = FrequencyGrid.for_bandwidth(20, antennas=env.ap_antennas)
    header = TraceHeader(grid.antennas, grid.subcarriers, 2, 5, 1000)
    with pytest.raises(DataError):
        write_trace(tmp_path / "t.bin", header, simulate_trace(env, grid, 2, 1000))


def test_path_dataclass_is_frozen():
    p = Path(1.0, 2.0, 0.5, 0.0)
    with pytest.raises(AttributeError):
        p.a = 0.3
