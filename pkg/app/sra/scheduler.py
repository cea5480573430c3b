"""
Divide-and-conquer RU selection over the RU tree.

Each node either takes a direct assignment from its level's user pool (one
user, or a zero-forcing MU group on RUs of 242 tones and up) or the merge of
its children's best schedules; the higher capacity wins. A user holds at most
one RU. Small user sets are solved exactly by dynamic programming over user
subsets; larger ones walk the tree left to right and remove users as they are
placed.
"""

from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from app.channel.csi import Csi
from app.phy.capacity import capacity_from_snr, zf_stream_snr
from app.phy.mcs import phy_rate_bps
from app.phy.metrics import snr_per_subcarrier
from app.phy.rate import select_mcs_from_snrs
from app.schemas import Schedule, ScheduleEntry
from app.sra.pools import T_MAX_S, UserDemand, UserPoolSet, assign_user_pools
from app.sra.ru_tree import RuTree
from app.utils.log import get_logger

log = get_logger("SRA")

MU_MIN_TONES = 242
TIE_TOL = 1e-9

Assignment = Tuple[str, Tuple[int, ...]]


@dataclass(frozen=True)
class Candidate:
    capacity: float = 0.0
    entries: Tuple[Assignment, ...] = ()

    @property
    def users(self) -> Tuple[int, ...]:
        return tuple(sorted(u for _, us in self.entries for u in us))

    def __add__(self, other: "Candidate") -> "Candidate":
        return Candidate(self.capacity + other.capacity, self.entries + other.entries)


def better(a: Candidate, b: Candidate) -> bool:
    """True if ``a`` strictly beats ``b``: capacity, then more users, then lower ids."""
    if abs(a.capacity - b.capacity) > TIE_TOL * max(1.0, abs(b.capacity)):
        return a.capacity > b.capacity
    ua, ub = a.users, b.users
    if len(ua) != len(ub):
        return len(ua) > len(ub)
    return ua < ub


class DivideConquer:
    def __init__(self, tree: RuTree, pools: UserPoolSet, csis: Mapping[int, Csi],
                 n_t: int = 1, n_r: int = 1, noise_power: float = 1.0, tx_power: float = 1.0):
        self.tree = tree
        self.pools = pools
        self.csis = csis
        self.noise_power = noise_power
        self.tx_power = tx_power
        self.max_group = max(1, n_t // max(n_r, 1))
        self._snr = {u: snr_per_subcarrier(csis[u], tx_power, noise_power) for u in pools.users()}
        self._su: Dict[Tuple[int, str], float] = {}
        self._mu: Dict[Tuple[str, Tuple[int, ...]], float] = {}

    # ---------- capacities ----------

    def su_capacity(self, user: int, node_id: str) -> float:
        key = (user, node_id)
        if key not in self._su:
            self._su[key] = capacity_from_snr(self._snr[user][self.tree.columns(node_id)])
        return self._su[key]

    def group_capacity(self, users: Tuple[int, ...], node_id: str) -> float:
        if len(users) == 1:
            return self.su_capacity(users[0], node_id)
        key = (node_id, users)
        if key not in self._mu:
            snr = zf_stream_snr([self.csis[u] for u in users], self.tree.columns(node_id),
                                self.tx_power, self.noise_power)
            self._mu[key] = capacity_from_snr(snr)
        return self._mu[key]

    def direct(self, node_id: str, available: Iterable[int]) -> Candidate:
        """Best single-RU assignment of ``node_id`` from the available pool members."""
        node = self.tree.node(node_id)
        pool = sorted(set(available) & self.pools.members(node.level))
        best = Candidate(0.0, ((node_id, ()),))
        for u in pool:
            cand = Candidate(self.su_capacity(u, node_id), ((node_id, (u,)),))
            if better(cand, best):
                best = cand
        if self.max_group < 2 or node.tones < MU_MIN_TONES or not best.users:
            return best
        # greedy MU grouping: add the user with the largest capacity gain
        group = best.users
        while len(group) < self.max_group:
            step = None
            for u in pool:
                if u in group:
                    continue
                trial = tuple(sorted(group + (u,)))
                cand = Candidate(self.group_capacity(trial, node_id), ((node_id, trial),))
                if better(cand, step or best):
                    step = cand
            if step is None:
                break
            best, group = step, step.users
        return best

    # ---------- search ----------

    def solve(self, exact_user_limit: int = 6) -> Candidate:
        users = sorted(self.pools.users())
        if len(users) <= exact_user_limit:
            return _ExactSearch(self, users).best(self.tree.root, (1 << len(users)) - 1)
        return self._greedy(self.tree.root, set(users))

    def _greedy(self, node_id: str, available: set) -> Candidate:
        children = self.tree.node(node_id).children
        merged: Optional[Candidate] = None
        if children:
            merged = Candidate()
            for child in children:
                part = self._greedy(child, available)
                available -= set(part.users)
                merged = merged + part
        pool = available | set(merged.users if merged else ())
        direct = self.direct(node_id, pool)
        if merged is not None and not better(direct, merged):
            return merged
        if merged is not None:
            available |= set(merged.users)
        available -= set(direct.users)
        return direct


class _ExactSearch:
    """Optimal cover and assignment by DP over (node, subset of users)."""

    def __init__(self, dq: DivideConquer, users: List[int]):
        self.dq = dq
        self.users = users
        self._memo: Dict[Tuple[str, int], Candidate] = {}
        self._split: Dict[Tuple[str, int, int], Candidate] = {}

    def _ids(self, mask: int) -> FrozenSet[int]:
        return frozenset(u for i, u in enumerate(self.users) if mask >> i & 1)

    def best(self, node_id: str, mask: int) -> Candidate:
        key = (node_id, mask)
        if key in self._memo:
            return self._memo[key]
        result = self.dq.direct(node_id, self._ids(mask))
        if self.dq.tree.node(node_id).children:
            merged = self._merge(node_id, 0, mask)
            if better(merged, result):
                result = merged
        self._memo[key] = result
        return result

    def _merge(self, node_id: str, i: int, mask: int) -> Candidate:
        children = self.dq.tree.node(node_id).children
        if i == len(children) - 1:
            return self.best(children[i], mask)
        key = (node_id, i, mask)
        if key in self._split:
            return self._split[key]
        best: Optional[Candidate] = None
        sub = mask
        while True:
            cand = self.best(children[i], sub) + self._merge(node_id, i + 1, mask & ~sub)
            if best is None or better(cand, best):
                best = cand
            if sub == 0:
                break
            sub = (sub - 1) & mask
        self._split[key] = best
        return best


# ---------- schedule assembly ----------

def _stream_snrs(dq: DivideConquer, node_id: str, users: Tuple[int, ...]) -> np.ndarray:
    cols = dq.tree.columns(node_id)
    if len(users) == 1:
        return dq._snr[users[0]][cols][None, :]
    return zf_stream_snr([dq.csis[u] for u in users], cols, dq.tx_power, dq.noise_power)


def _to_schedule(dq: DivideConquer, cand: Candidate,
                 demands: Optional[Mapping[int, UserDemand]]) -> Schedule:
    tree = dq.tree
    entries = []
    for node_id, users in sorted(cand.entries, key=lambda e: tree.node(e[0]).span[0]):
        entry = ScheduleEntry(ru=tree.ref(node_id), users=list(users))
        if users:
            snrs = _stream_snrs(dq, node_id, users)
            entry.capacity = capacity_from_snr(snrs)
            for u, row in zip(users, snrs):
                entry.mcs[u] = select_mcs_from_snrs(row)
                if demands is not None and u in demands:
                    rate = phy_rate_bps(tree.node(node_id).data_tones, entry.mcs[u])
                    entry.t_k_s[u] = demands[u].bsr_bytes * 8 / rate
        entries.append(entry)
    return Schedule(bandwidth_mhz=tree.bandwidth_mhz, entries=entries,
                    capacity=sum(e.capacity for e in entries))


def divide_conquer(pools: UserPoolSet, csis: Mapping[int, Csi], tree: RuTree,
                   n_t: int = 1, n_r: int = 1, noise_power: float = 1.0, tx_power: float = 1.0,
                   exact_user_limit: int = 6,
                   demands: Optional[Mapping[int, UserDemand]] = None) -> Schedule:
    dq = DivideConquer(tree, pools, csis, n_t, n_r, noise_power, tx_power)
    return _to_schedule(dq, dq.solve(exact_user_limit), demands)


def repair_empty_rus(schedule: Schedule, pools: UserPoolSet, tree: RuTree,
                     csis: Mapping[int, Csi], n_t: int = 1, n_r: int = 1,
                     noise_power: float = 1.0, tx_power: float = 1.0, exact_user_limit: int = 6,
                     demands: Optional[Mapping[int, UserDemand]] = None) -> Tuple[Schedule, int]:
    """Re-run the search on lifted pools until no RU is empty.

    Every pass moves the deepest non-empty pool level up by at least one, so
    this stops within ``tree.depth`` passes. Returns the schedule and the
    number of passes.
    """
    if not pools.users():
        raise ValueError("cannot repair a schedule without users")
    passes = 0
    while schedule.empty_entries() and pools.deepest_nonempty() > 0:
        pools = pools.shift_up()
        passes += 1
        schedule = divide_conquer(pools, csis, tree, n_t, n_r, noise_power, tx_power,
                                  exact_user_limit, demands)
    if passes:
        log.debug(f"repair took {passes} passes, {len(schedule.entries)} RUs")
    return schedule, passes


def set_duration(schedule: Schedule, t_min_s: float, t_max_s: float = T_MAX_S) -> float:
    """Packet length: the shortest per-user drain time, bounded to [t_min, t_max]."""
    t_k = [t for e in schedule.entries for t in e.t_k_s.values()]
    if not t_k:
        raise ValueError("set_duration needs a schedule with at least one user")
    return min(max(min(t_k), t_min_s), t_max_s)


def schedule_uplink(demands: Sequence[UserDemand], csis: Mapping[int, Csi], tree: RuTree,
                    n_t: int = 1, n_r: int = 1, noise_power: float = 1.0, tx_power: float = 1.0,
                    t_min_s: float = 0.5e-3, t_max_s: float = T_MAX_S,
                    exact_user_limit: int = 6) -> Schedule:
    """Pools, search, repair and duration for one trigger round."""
    by_id = {d.id: d for d in demands}
    pools = assign_user_pools(demands, tree, t_max_s)
    schedule = divide_conquer(pools, csis, tree, n_t, n_r, noise_power, tx_power,
                              exact_user_limit, by_id)
    schedule, _ = repair_empty_rus(schedule, pools, tree, csis, n_t, n_r, noise_power,
                                   tx_power, exact_user_limit, by_id)
    schedule.t_s = set_duration(schedule, t_min_s, t_max_s)
    return schedule
