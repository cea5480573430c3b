"""
CSI acquisition router.
Decides when a round needs fresh CSI and hands acquisition to the strategy of
the configured mode.
"""

from typing import Dict, Mapping, Optional, Sequence

import numpy as np

from app.channel.csi import Csi, FrequencyGrid
from app.errors import NoPriorPacket
from app.model.network import ClcpModel
from app.schemas import Mode, SimConfig
from app.sra.ru_tree import RuTree
from app.strategies import STRATEGIES, Acquisition, BaselineStrategy, BaseStrategy, RoundState
from app.utils.log import get_logger

log = get_logger("ORCHESTRATOR")


class Orchestrator:
    """
    Per-round acquisition routing. A strategy that cannot run yet (cross-link
    prediction before any uplink packet exists) falls back to full sounding.
    """

    def __init__(self, cfg: SimConfig, tree: RuTree, grid: FrequencyGrid, rng: np.random.Generator,
                 groups: Sequence[Sequence[int]] = (),
                 models: Optional[Mapping[int, ClcpModel]] = None):
        self.cfg = cfg
        kind = STRATEGIES[Mode(cfg.mode)]
        if Mode(cfg.mode) == Mode.CLCP:
            self.strategy: BaseStrategy = kind(cfg, tree, grid, rng, groups, models)
        else:
            self.strategy = kind(cfg, tree, grid, rng)
        self.fallback = BaselineStrategy(cfg, tree, grid, rng)

    # ---------------------------
    # REFRESH DECISION
    # ---------------------------

    def needs_refresh(self, cache: Mapping[int, Csi], users: Sequence[int], now_us: int) -> bool:
        """True when any user lacks CSI or holds CSI older than the mode's refresh interval."""
        if self.cfg.mode == Mode.ORACLE:
            return True
        limit = self.strategy.refresh_interval_us()
        return any(u not in cache or now_us - cache[u].timestamp_us > limit for u in users)

    # ---------------------------
    # ACQUISITION
    # ---------------------------

    def acquire(self, state: RoundState, users: Sequence[int]) -> Acquisition:
        try:
            return self.strategy.acquire(state, users)
        except NoPriorPacket as e:
            log.warning(f"{e} - using fallback")
            return self.fallback.acquire(state, users)

    def refresh(self, cache: Dict[int, Csi], state: RoundState, users: Sequence[int]) -> Acquisition:
        """Acquire for ``users`` and store the results in ``cache`` stamped with the round time."""
        result = self.acquire(state, users)
        for u, csi in result.csis.items():
            csi.timestamp_us = state.now_us
            cache[u] = csi
        return result
