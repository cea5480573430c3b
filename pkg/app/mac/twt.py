"""Target-wake-time accounting from the MAC event log."""

from dataclasses import dataclass
from typing import Dict, Iterable, Sequence

from app.schemas import MacEvent

TX_POWER_W = 0.135
IDLE_POWER_W = 600e-6


@dataclass
class TwtRecord:
    wakes: int = 0
    awake_us: int = 0
    tx_us: int = 0
    sleep_fraction: float = 1.0
    energy_j: float = 0.0


def twt_account(events: Iterable[MacEvent], users: Sequence[int], duration_us: int,
                tx_power_w: float = TX_POWER_W, idle_power_w: float = IDLE_POWER_W) -> Dict[int, TwtRecord]:
    """Per-user wakes, awake airtime, sleep fraction and energy.

    A user wakes in a round iff it transmits something in that round (data,
    pilot, feedback, BSR report or CTS); it is awake for every frame that
    names it.
    """
    if duration_us <= 0:
        raise ValueError("duration must be positive")
    records = {u: TwtRecord() for u in users}
    woke = {u: set() for u in users}
    for ev in events:
        for u in ev.users:
            rec = records.get(u)
            if rec is None:
                continue
            rec.awake_us += ev.duration_us
            if ev.tx:
                rec.tx_us += ev.duration_us
                woke[u].add(ev.round)
    for u, rec in records.items():
        rec.wakes = len(woke[u])
        rec.sleep_fraction = max(0.0, 1.0 - rec.awake_us / duration_us)
        rec.energy_j = rec.tx_us * 1e-6 * tx_power_w + rec.awake_us * 1e-6 * idle_power_w
    return records
