"""Buffer-driven user pools: which RU levels each user may be scheduled on."""

from dataclasses import dataclass, field
from typing import List, Sequence, Set

import numpy as np

from app.sra.ru_tree import RuTree, phy_rate_table

T_MAX_S = 5.484e-3


@dataclass(frozen=True)
class UserDemand:
    id: int
    bsr_bytes: int
    mcs: int


@dataclass
class UserPoolSet:
    """``groups[l]`` holds the ids eligible for RUs at tree level l."""

    groups: List[Set[int]] = field(default_factory=list)

    @property
    def depth(self) -> int:
        return len(self.groups) - 1

    def members(self, level: int) -> Set[int]:
        return self.groups[level] if 0 <= level < len(self.groups) else set()

    def users(self) -> Set[int]:
        return set().union(*self.groups) if self.groups else set()

    def deepest_nonempty(self) -> int:
        levels = [l for l, g in enumerate(self.groups) if g]
        return levels[-1] if levels else -1

    def copy(self) -> "UserPoolSet":
        return UserPoolSet([set(g) for g in self.groups])

    def shift_up(self) -> "UserPoolSet":
        """Drop empty groups and renumber the rest from level 0; if nothing
        moves, fold the deepest non-empty group into the one above it."""
        nonempty = [set(g) for g in self.groups if g]
        compact = nonempty + [set() for _ in range(len(self.groups) - len(nonempty))]
        if compact != self.groups:
            return UserPoolSet(compact)
        if len(nonempty) <= 1:
            return self.copy()
        nonempty[-2] |= nonempty[-1]
        nonempty.pop()
        return UserPoolSet(nonempty + [set() for _ in range(len(self.groups) - len(nonempty))])


def required_rate(bsr_bytes: int, t_max_s: float = T_MAX_S) -> float:
    return bsr_bytes * 8 / t_max_s


def assign_user_pools(users: Sequence[UserDemand], tree: RuTree,
                      t_max_s: float = T_MAX_S) -> UserPoolSet:
    """Put each user in the pools of the smallest RU level that carries its
    buffered bytes within ``t_max_s`` and every smaller level below it."""
    if not users:
        raise ValueError("assign_user_pools needs at least one user")
    rates = phy_rate_table(tree)
    depth = tree.depth
    pools = UserPoolSet([set() for _ in range(depth + 1)])
    for u in users:
        demand = required_rate(u.bsr_bytes, t_max_s)
        fits = np.nonzero(rates[:, u.mcs] >= demand)[0]
        start = int(fits.max()) if fits.size else 0
        for level in range(start, depth + 1):
            pools.groups[level].add(u.id)
    return pools
