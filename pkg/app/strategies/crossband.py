"""Cross-band prediction: each user sends a short pilot on one RU, the AP
extracts its paths and resynthesizes the full band."""

from typing import Sequence

from app.baselines import predict_fullband_crossband
from app.mac.frames import pilot_rus, pilot_sequence
from app.schemas import Mode
from app.strategies.base import Acquisition, BaseStrategy, RoundState


class CrossbandStrategy(BaseStrategy):
    mode = Mode.CROSSBAND

    def acquire(self, state: RoundState, users: Sequence[int]) -> Acquisition:
        users = sorted(users)
        csis = {}
        for u, node_id in pilot_rus(users, self.tree).items():
            partial = self._measure(state.truth[u], self._ru_mask(node_id))
            csis[u] = predict_fullband_crossband(partial, self.grid, self.cfg.estimator)
            csis[u].timestamp_us = state.now_us
        return Acquisition(pilot_sequence(users, self.cfg, self.tree), csis,
                           self._evm_records(state, csis))
