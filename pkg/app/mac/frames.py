"""
Frame airtime and the per-mode sounding sequences.

Control frames go out at the legacy control rate behind a legacy preamble;
OFDMA PPDUs (BSR reports, CSI feedback, pilots) carry an HE preamble and are
packed into RUs sized so that every user of one round gets an RU.
"""

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from app.channel.csi import FFT_SIZE
from app.phy.mcs import SYMBOL_US, mcs_entry
from app.schemas import FrameBudget, Mode, Schedule, SimConfig
from app.sra.ru_tree import RuTree, build_ru_tree


@dataclass(frozen=True)
class Frame:
    kind: str
    duration_us: int
    category: str
    users: Tuple[int, ...] = ()
    tx: bool = False
    size_bytes: int = 0


@dataclass(frozen=True)
class SoundingCost:
    airtime_us: int
    bytes: int


# ---------------------------
# FEEDBACK SIZE
# ---------------------------

def feedback_payload_bits(tones: int, bits: int, tx_antennas: int, rx_antennas: int,
                          coherence_ms: float, grouping: int, feedback_period_ms: float) -> float:
    """tones * bits * TxAnt * RxAnt * T_c / (grouping * feedback period)."""
    if grouping < 1:
        raise ZeroDivisionError("subcarrier grouping must be at least 1")
    if feedback_period_ms <= 0:
        raise ZeroDivisionError("feedback period must be positive")
    return tones * bits * tx_antennas * rx_antennas * coherence_ms / (grouping * feedback_period_ms)


def feedback_bits(cfg: SimConfig, tones: Optional[int] = None, tx_antennas: int = 1,
                  rx_antennas: Optional[int] = None) -> float:
    """CSI feedback bits per user per coherence time.

    With the feedback period equal to T_c this is the payload of one
    feedback event. ``tones`` defaults to the FFT size of the bandwidth.
    """
    tones = FFT_SIZE[cfg.bandwidth_mhz] if tones is None else tones
    rx = cfg.environment.ap_antennas if rx_antennas is None else rx_antennas
    return feedback_payload_bits(tones, cfg.csi_bits, tx_antennas, rx, cfg.coherence_ms,
                                 cfg.grouping, cfg.feedback_period_ms)


def feedback_event_bits(cfg: SimConfig, tones: Optional[int] = None, tx_antennas: int = 1,
                        rx_antennas: Optional[int] = None) -> int:
    """Payload of one feedback event: the per-T_c load spread over the events inside T_c."""
    per_tc = feedback_bits(cfg, tones, tx_antennas, rx_antennas)
    return math.ceil(per_tc * cfg.feedback_period_ms / cfg.coherence_ms)


def feedback_load_bps(cfg: SimConfig, tones: Optional[int] = None, tx_antennas: int = 1,
                      rx_antennas: Optional[int] = None) -> float:
    return feedback_bits(cfg, tones, tx_antennas, rx_antennas) / (cfg.coherence_ms * 1e-3)


# ---------------------------
# AIRTIME
# ---------------------------

def control_frame(kind: str, n_bytes: int, budget: FrameBudget, category: str = "control",
                  users: Sequence[int] = (), tx: bool = False) -> Frame:
    return Frame(kind, budget.control_airtime_us(n_bytes), category, tuple(users), tx, n_bytes)


def sifs(budget: FrameBudget, category: str = "sifs") -> Frame:
    return Frame("sifs", budget.sifs_us, category)


def ppdu_airtime_us(payload_bits: float, data_tones: int, mcs: int, budget: FrameBudget) -> int:
    """HE preamble plus the OFDM symbols needed for ``payload_bits`` on one RU."""
    per_symbol = data_tones * mcs_entry(mcs).data_bits
    symbols = math.ceil(payload_bits / per_symbol) if payload_bits > 0 else 0
    return budget.he_preamble_us + math.ceil(symbols * SYMBOL_US)


def max_ofdma_users(tree: RuTree) -> int:
    return len(tree.levels[tree.depth])


def round_ru_level(tree: RuTree, users: int) -> int:
    """Shallowest tree level with at least ``users`` RUs."""
    if users < 1:
        raise ValueError("an OFDMA round needs at least one user")
    for level, ids in enumerate(tree.levels):
        if len(ids) >= users:
            return level
    raise ValueError(f"{users} users exceed the {max_ofdma_users(tree)} RUs of {tree.bandwidth_mhz} MHz")


def round_ru_tones(tree: RuTree, users: int) -> int:
    """Data tones of the RU each user gets when ``users`` share one OFDMA PPDU."""
    return min(tree.node(n).data_tones for n in tree.levels[round_ru_level(tree, users)])


def ofdma_rounds(users: Sequence[int], tree: RuTree) -> List[Tuple[int, ...]]:
    limit = max_ofdma_users(tree)
    return [tuple(users[i:i + limit]) for i in range(0, len(users), limit)]


# ---------------------------
# SEQUENCES
# ---------------------------

def baseline_sequence(users: Sequence[int], cfg: SimConfig, tree: Optional[RuTree] = None,
                      budget: Optional[FrameBudget] = None, tones: Optional[int] = None) -> List[Frame]:
    """BSR poll/report rounds, CSI poll + NDP, then OFDMA feedback rounds.

    ``tones`` sets the subcarriers each feedback report describes (FFT size by default).
    """
    tree = tree or build_ru_tree(cfg.bandwidth_mhz)
    budget = budget or cfg.budget
    users = list(users)
    if not users:
        return []
    rounds = ofdma_rounds(users, tree)
    frames: List[Frame] = []
    for group in rounds:
        frames.append(control_frame("bsr_poll", budget.bsr_poll_bytes, budget, users=group))
        frames.append(sifs(budget))
        ru_tones = round_ru_tones(tree, len(group))
        frames.append(Frame("bsr_report", ppdu_airtime_us(budget.bsr_report_bytes * 8, ru_tones,
                                                         cfg.feedback_mcs, budget),
                            "control", group, True, budget.bsr_report_bytes * len(group)))
        frames.append(sifs(budget))

    frames.append(control_frame("csi_poll", budget.csi_poll_bytes, budget, "sounding", users))
    frames.append(sifs(budget, "sounding"))
    ndp_us = budget.he_preamble_us + budget.ndp_ltf_us * cfg.environment.ap_antennas
    frames.append(Frame("ndp", ndp_us, "sounding", tuple(users)))
    frames.append(sifs(budget, "sounding"))

    payload = feedback_event_bits(cfg, tones)
    for group in rounds:
        frames.append(control_frame("trigger", budget.tf_bytes(len(group)), budget, "sounding", group))
        frames.append(sifs(budget, "sounding"))
        ru_tones = round_ru_tones(tree, len(group))
        frames.append(Frame("feedback", ppdu_airtime_us(payload, ru_tones, cfg.feedback_mcs, budget),
                            "sounding", group, True, math.ceil(payload / 8) * len(group)))
        frames.append(sifs(budget, "sounding"))
    return frames


def pilot_sequence(users: Sequence[int], cfg: SimConfig, tree: Optional[RuTree] = None,
                   budget: Optional[FrameBudget] = None) -> List[Frame]:
    """MU-RTS/CTS, then trigger + pilot PPDU rounds for the listed users."""
    tree = tree or build_ru_tree(cfg.bandwidth_mhz)
    budget = budget or cfg.budget
    users = list(users)
    if not users:
        return []
    frames = [
        control_frame("mu_rts", budget.mu_rts_bytes, budget, "sounding", users),
        sifs(budget, "sounding"),
        control_frame("cts", budget.cts_bytes, budget, "sounding", users, tx=True),
        sifs(budget, "sounding"),
    ]
    pilot_us = budget.he_preamble_us + math.ceil(budget.pilot_symbols * SYMBOL_US)
    for group in ofdma_rounds(users, tree):
        frames.append(control_frame("trigger", budget.tf_bytes(len(group)), budget, "sounding", group))
        frames.append(sifs(budget, "sounding"))
        frames.append(Frame("pilot", pilot_us, "sounding", group, True))
        frames.append(sifs(budget, "sounding"))
    return frames


def pilot_rus(users: Sequence[int], tree: RuTree) -> Dict[int, str]:
    """RU node each user transmits its pilot on, in the order of :func:`pilot_sequence`."""
    out: Dict[int, str] = {}
    for group in ofdma_rounds(list(users), tree):
        nodes = tree.levels[round_ru_level(tree, len(group))]
        out.update(zip(group, nodes))
    return out


def data_exchange(schedule: Schedule, budget: FrameBudget) -> List[Frame]:
    """Trigger, SIFS, the uplink OFDMA PPDU of length T_s, SIFS, multi-user block ack."""
    users = tuple(schedule.users())
    if not users or schedule.t_s is None:
        raise ValueError("data exchange needs a schedule with users and a duration")
    data_us = budget.he_preamble_us + math.ceil(schedule.t_s * 1e6)
    return [
        control_frame("trigger", budget.tf_bytes(len(users)), budget, users=users),
        sifs(budget),
        Frame("data", data_us, "data", users, True),
        sifs(budget),
        control_frame("ba", budget.ba_bytes(len(users)), budget, users=users),
    ]


def sequence_airtime(frames: Sequence[Frame]) -> int:
    return sum(f.duration_us for f in frames)


def sounding_cost(mode: Mode, users: int, cfg: SimConfig, budget: Optional[FrameBudget] = None,
                  pilot_users: int = 0, tones: Optional[int] = None) -> SoundingCost:
    """Sounding airtime and bytes of one acquisition for ``users`` users.

    BSR polling is control traffic and is not counted here. Only clcp mode
    reads ``pilot_users``: one pilot per group that had no view in the last
    uplink packet.
    """
    mode = Mode(mode)
    budget = budget or cfg.budget
    if mode == Mode.BASELINE:
        frames = baseline_sequence(range(users), cfg, budget=budget, tones=tones)
    elif mode == Mode.CROSSBAND:
        frames = pilot_sequence(range(users), cfg, budget=budget)
    elif mode == Mode.CLCP:
        frames = pilot_sequence(range(pilot_users), cfg, budget=budget)
    else:
        frames = []
    frames = [f for f in frames if f.category == "sounding"]
    return SoundingCost(sequence_airtime(frames), sum(f.size_bytes for f in frames))
