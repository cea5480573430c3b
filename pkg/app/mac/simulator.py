"""
Uplink OFDMA timeline.

One simpy process per user turns constant-bitrate traffic into buffered
MPDUs; the access point process runs trigger rounds back to back:

1. refresh CSI through the orchestrator when the cache is too old,
2. select MCS and run the scheduler on the cached CSI,
3. trigger, receive the OFDMA PPDU, acknowledge,
4. keep the received packet as the next round's opportunistic observation.

Time is integer microseconds. Every microsecond of the run is booked to one
of sounding, control, data, sifs or idle.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, Generator, List, Mapping, Optional, Tuple

import numpy as np
import simpy

from app.channel.csi import Csi, FrequencyGrid, synthesize_csi
from app.channel.environment import Environment, advance, build_environment, paths_for_link
from app.errors import DataError
from app.mac.frames import Frame, data_exchange
from app.mac.observe import PacketRecord, record_packet
from app.mac.twt import twt_account
from app.model.grouping import form_groups
from app.model.network import ClcpModel
from app.orchestrator import Orchestrator
from app.phy.capacity import mismatched_stream_snr
from app.phy.mcs import phy_rate_bps
from app.phy.rate import packet_error_rate, select_mcs
from app.schemas import (EnvironmentConfig, EvmRecord, MacEvent, PerRecord, Schedule, SimConfig, SimMetrics,
                         WindowRecord)
from app.sra.pools import UserDemand
from app.sra.ru_tree import build_ru_tree
from app.sra.scheduler import schedule_uplink
from app.strategies import RoundState
from app.utils.log import get_logger

log = get_logger("SIM")

CATEGORIES = ("sounding", "control", "data", "sifs", "idle")


@dataclass
class SimResult:
    metrics: SimMetrics
    events: List[MacEvent] = field(default_factory=list)


def environment_config(cfg: SimConfig) -> EnvironmentConfig:
    """The simulation's environment: bandwidth follows the run and ``user_count``
    overrides the generated population. The environment keeps its own seed so
    that models trained on it stay valid across MAC seeds."""
    env_cfg = cfg.environment
    update = {"bandwidth_mhz": cfg.bandwidth_mhz}
    if cfg.user_count is not None:
        if env_cfg.users and len(env_cfg.users) != cfg.user_count:
            raise DataError(f"user_count {cfg.user_count} contradicts {len(env_cfg.users)} listed users")
        update["user_count"] = cfg.user_count
    if not env_cfg.users and not update.get("user_count", env_cfg.user_count):
        raise DataError("simulation needs at least one user")
    return env_cfg.model_copy(update=update)


class UplinkSimulation:
    def __init__(self, cfg: SimConfig, models: Optional[Mapping[int, ClcpModel]] = None):
        self.cfg = cfg
        env_cfg = environment_config(cfg)
        self.world: Environment = build_environment(env_cfg)
        self.links = self.world.link_ids()
        self.tree = build_ru_tree(cfg.bandwidth_mhz)
        self.grid = FrequencyGrid.for_bandwidth(cfg.bandwidth_mhz, env_cfg.ap_antennas, env_cfg.center_freq_hz)
        self.usable = np.nonzero(self.tree.usable_mask())[0]
        self.noise_power = 10 ** (-cfg.snr_db / 10)
        self.rng = np.random.default_rng([cfg.seed, 1])
        self.groups = form_groups({u.id: u.position for u in self.world.users}, cfg.group_radius_m)
        self.orchestrator = Orchestrator(cfg, self.tree, self.grid, self.rng, self.groups, models)

        self.sim = simpy.Environment()
        self.duration_us = int(round(cfg.duration_ms * 1000))
        self.buffers = {u: 0 for u in self.links}
        self.offered = {u: 0 for u in self.links}
        self.delivered = {u: 0 for u in self.links}
        self.cache: Dict[int, Csi] = {}
        self.events: List[MacEvent] = []
        self.airtime = {c: 0 for c in CATEGORIES}
        self.deliveries: List[Tuple[int, int]] = []
        self.evm_records: List[EvmRecord] = []
        self.per_records: List[PerRecord] = []
        self.last_packet: Optional[PacketRecord] = None
        self.round = 0
        self._truth_at: Optional[int] = None
        self._truth: Dict[int, Csi] = {}

    # ---------------------------
    # CHANNEL
    # ---------------------------

    def truth(self) -> Dict[int, Csi]:
        """Ground-truth CSI of every link at the current simulation time."""
        now = int(self.sim.now)
        if self._truth_at != now:
            dt = now * 1e-6 - self.world.time_s
            if dt > 0:
                self.world = advance(self.world, dt)
            self._truth = {u: synthesize_csi(paths_for_link(self.world, u), self.grid, now) for u in self.links}
            self._truth_at = now
        return self._truth

    # ---------------------------
    # PROCESSES
    # ---------------------------

    def _traffic(self, user: int, phase: float) -> Generator:
        size = self.cfg.mpdu_bytes
        interval = size * 8 / self.cfg.traffic_bps * 1e6
        k = 0
        while True:
            t = int(round((k + phase) * interval))
            if t >= self.duration_us:
                return
            yield self.sim.timeout(t - self.sim.now)
            self.buffers[user] += size
            self.offered[user] += size
            k += 1

    def _spend(self, frame: Frame) -> Generator:
        """Occupy the medium for ``frame``; False if the run ended first."""
        now = int(self.sim.now)
        duration = min(frame.duration_us, self.duration_us - now)
        if duration <= 0:
            return False
        self.events.append(MacEvent(round=self.round, time_us=now, duration_us=duration, kind=frame.kind,
                                    category=frame.category, users=list(frame.users), tx=frame.tx,
                                    size_bytes=frame.size_bytes))
        self.airtime[frame.category] += duration
        yield self.sim.timeout(duration)
        return duration == frame.duration_us

    def _idle(self) -> Generator:
        return (yield from self._spend(Frame("idle", self.cfg.idle_slot_us, "idle")))

    def _access_point(self) -> Generator:
        while self.sim.now < self.duration_us:
            active = [u for u in self.links if self.buffers[u] > 0]
            if not active:
                yield from self._idle()
                continue
            self.round += 1
            state = RoundState(int(self.sim.now), self.truth(), self.last_packet)
            if self.orchestrator.needs_refresh(self.cache, self.links, state.now_us):
                acquisition = self.orchestrator.refresh(self.cache, state, self.links)
                self.evm_records.extend(acquisition.evm_records)
                complete = True
                for frame in acquisition.frames:
                    complete = (yield from self._spend(frame))
                    if not complete:
                        break
                if not complete:
                    return

            schedule = self._schedule([u for u in self.links if self.buffers[u] > 0])
            if schedule is None:
                yield from self._idle()
                continue
            data_start = None
            for frame in data_exchange(schedule, self.cfg.budget):
                if frame.kind == "data":
                    data_start = int(self.sim.now)
                if not (yield from self._spend(frame)):
                    return
            truth = self.truth()
            self._deliver(schedule, truth, int(self.sim.now))
            self.last_packet = record_packet(schedule, truth, self.tree, data_start,
                                             self.cfg.measurement_snr_db, self.rng)

    # ---------------------------
    # ROUND STEPS
    # ---------------------------

    def _schedule(self, active: List[int]) -> Optional[Schedule]:
        demands = [UserDemand(u, self.buffers[u],
                              select_mcs(self.cache[u], self.noise_power, columns=self.usable))
                   for u in active if u in self.cache]
        if not demands:
            return None
        cfg = self.cfg
        schedule = schedule_uplink(demands, {d.id: self.cache[d.id] for d in demands}, self.tree,
                                   n_t=self.grid.antennas, n_r=1, noise_power=self.noise_power,
                                   t_min_s=cfg.t_min_ms * 1e-3, t_max_s=cfg.t_max_ms * 1e-3,
                                   exact_user_limit=cfg.exact_user_limit)
        log.debug(f"round {self.round}: {len(schedule.users())} users on "
                  f"{len(schedule.entries)} RUs, T={schedule.t_s * 1e3:.3f} ms")
        return schedule

    def _deliver(self, schedule: Schedule, truth: Mapping[int, Csi], ack_us: int) -> None:
        """Draw per-MPDU success on the true channel; failed bytes are dropped."""
        mpdu = self.cfg.mpdu_bytes
        for entry in schedule.entries:
            if not entry.users:
                continue
            node = self.tree.node(entry.ru.node_id)
            cols = self.tree.columns(node.node_id)
            snrs = mismatched_stream_snr([self.cache[u] for u in entry.users],
                                         [truth[u] for u in entry.users], cols, 1.0, self.noise_power)
            for u, row in zip(entry.users, snrs):
                mcs = entry.mcs[u]
                rate = phy_rate_bps(node.data_tones, mcs)
                sent = min(self.buffers[u], int(rate * schedule.t_s / 8))
                if sent <= 0:
                    continue
                full, rest = divmod(sent, mpdu)
                sizes = np.array([mpdu] * full + ([rest] if rest else []))
                per = packet_error_rate(mcs, row, mpdu * 8)
                ok = self.rng.random(sizes.size) >= per
                got = int(sizes[ok].sum())
                self.buffers[u] -= sent
                self.delivered[u] += got
                self.deliveries.append((ack_us, got * 8))
                self.per_records.append(PerRecord(time_us=ack_us, user=u, mcs=mcs, rate_bps=rate, per=per,
                                                  mpdus=int(sizes.size), delivered=int(ok.sum())))

    # ---------------------------
    # RUN
    # ---------------------------

    def run(self) -> SimResult:
        if self.cfg.traffic_bps > 0:
            for i, u in enumerate(self.links):
                self.sim.process(self._traffic(u, i / len(self.links)))
        self.sim.process(self._access_point())
        self.sim.run()
        metrics = self._metrics()
        log.info(f"{self.cfg.mode.value}: {metrics.throughput_bps / 1e6:.2f} Mb/s, "
                 f"sounding {metrics.sounding_fraction:.1%}, {self.round} rounds")
        return SimResult(metrics, self.events)

    def _windows(self) -> List[WindowRecord]:
        window_us = int(round(self.cfg.window_ms * 1000))
        count = math.ceil(self.duration_us / window_us)
        out = []
        for w in range(count):
            start, end = w * window_us, min((w + 1) * window_us, self.duration_us)
            last = w == count - 1
            bits = sum(b for t, b in self.deliveries if start <= t < end or (last and t == end))
            sounding = sum(max(0, min(ev.time_us + ev.duration_us, end) - max(ev.time_us, start))
                           for ev in self.events if ev.category == "sounding")
            span_s = (end - start) * 1e-6
            out.append(WindowRecord(window_start_ms=start / 1000, throughput_bps=bits / span_s,
                                    sounding_fraction=sounding / (end - start)))
        return out

    def _metrics(self) -> SimMetrics:
        cfg = self.cfg
        twt = twt_account(self.events, self.links, self.duration_us, cfg.tx_power_w, cfg.idle_power_w)
        total_bits = sum(self.delivered.values()) * 8
        return SimMetrics(
            mode=cfg.mode,
            seed=cfg.seed,
            users=len(self.links),
            bandwidth_mhz=cfg.bandwidth_mhz,
            duration_us=self.duration_us,
            throughput_bps=total_bits / (self.duration_us * 1e-6),
            windows=self._windows(),
            offered_bytes=dict(self.offered),
            delivered_bytes=dict(self.delivered),
            airtime_us=dict(self.airtime),
            sounding_fraction=self.airtime["sounding"] / self.duration_us,
            wake_counts={u: r.wakes for u, r in twt.items()},
            sleep_fractions={u: r.sleep_fraction for u, r in twt.items()},
            energy_j={u: r.energy_j for u, r in twt.items()},
            evm_records=self.evm_records,
            per_records=self.per_records,
        )


def simulate(cfg: SimConfig, models: Optional[Mapping[int, ClcpModel]] = None) -> SimResult:
    """Run one simulation and keep its event log."""
    return UplinkSimulation(cfg, models).run()


def run(cfg: SimConfig, models: Optional[Mapping[int, ClcpModel]] = None) -> SimMetrics:
    return simulate(cfg, models).metrics
