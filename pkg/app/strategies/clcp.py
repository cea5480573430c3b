"""
Cross-link prediction.

Groups whose users appeared in the last uplink packet are predicted from
those partial observations at no airtime cost. A group nobody in the last
packet belongs to sends one pilot (its lowest link id) and is predicted from
that single view.
"""

from dataclasses import replace
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np

from app.channel.csi import Csi, FrequencyGrid, PathSet
from app.errors import DataError
from app.estimator import estimate_paths
from app.mac.frames import pilot_rus, pilot_sequence
from app.mac.observe import PacketRecord, fallback_groups, opportunistic_observe
from app.model.network import ClcpModel
from app.schemas import Mode, SimConfig
from app.sra.ru_tree import RuTree
from app.strategies.base import Acquisition, BaseStrategy, RoundState
from app.utils.log import get_logger

log = get_logger("CLCP")


class ClcpStrategy(BaseStrategy):
    mode = Mode.CLCP

    def __init__(self, cfg: SimConfig, tree: RuTree, grid: FrequencyGrid, rng: np.random.Generator,
                 groups: Sequence[Sequence[int]], models: Optional[Mapping[int, ClcpModel]] = None):
        super().__init__(cfg, tree, grid, rng)
        self.groups = [sorted(g) for g in groups]
        self.models = dict(models or {})
        if not cfg.oracle_predictor:
            self._check_models(grid)

    def _check_models(self, grid: FrequencyGrid) -> None:
        if not self.models:
            raise DataError("clcp mode needs a trained model per group (or oracle_predictor)")
        if len(self.models) != len(self.groups):
            raise DataError(f"{len(self.models)} models supplied for {len(self.groups)} groups")
        for g, links in enumerate(self.groups):
            model = self.models.get(g)
            if model is None:
                raise DataError(f"no model for group {g}")
            if sorted(model.link_ids) != links:
                raise DataError(f"model for group {g} covers links {model.link_ids}, expected {links}")
            if model.grid.key() != grid.key():
                raise DataError(f"model for group {g} was trained on a different frequency grid")

    def _fresh_packet(self, state: RoundState) -> Optional[PacketRecord]:
        packet = state.last_packet
        if packet is not None and state.now_us - packet.time_us > self.refresh_interval_us():
            return PacketRecord(packet.time_us, packet.schedule)
        return packet

    def acquire(self, state: RoundState, users: Sequence[int]) -> Acquisition:
        observed = opportunistic_observe(self._fresh_packet(state), self.groups)
        missing = fallback_groups(observed)
        pilots = [self.groups[g][0] for g in missing]
        for g, (link, node_id) in zip(missing, pilot_rus(pilots, self.tree).items()):
            observed[g][link] = self._measure(state.truth[link], self._ru_mask(node_id))
        if missing:
            log.debug(f"{len(missing)} of {len(self.groups)} groups unobserved, {len(pilots)} pilots")

        wanted = set(users)
        csis: Dict[int, Csi] = {}
        for g, links in enumerate(self.groups):
            if wanted.isdisjoint(links):
                continue
            csis.update(self._predict(g, links, observed[g], state))
        return Acquisition(pilot_sequence(pilots, self.cfg, self.tree), csis,
                           self._evm_records(state, csis))

    def _predict(self, g: int, links: List[int], views: Mapping[int, Csi],
                 state: RoundState) -> Dict[int, Csi]:
        if self.cfg.oracle_predictor:
            return {u: replace(state.truth[u], values=state.truth[u].values.copy(),
                               timestamp_us=state.now_us) for u in links}
        paths: Dict[int, PathSet] = {u: estimate_paths(csi, self.cfg.estimator) for u, csi in views.items()}
        return self.models[g].predict(paths, links, strict=False, timestamp_us=state.now_us)
