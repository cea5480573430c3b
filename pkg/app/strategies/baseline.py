"""Explicit sounding: every user is polled, hears the NDP and feeds back its CSI."""

from typing import Sequence

from app.mac.frames import baseline_sequence
from app.schemas import Mode
from app.strategies.base import Acquisition, BaseStrategy, RoundState


class BaselineStrategy(BaseStrategy):
    mode = Mode.BASELINE

    def refresh_interval_us(self) -> int:
        return int(round(self.cfg.feedback_period_ms * 1000))

    def acquire(self, state: RoundState, users: Sequence[int]) -> Acquisition:
        users = sorted(users)
        csis = {u: self._measure(state.truth[u]) for u in users}
        return Acquisition(baseline_sequence(users, self.cfg, self.tree), csis,
                           self._evm_records(state, csis))
