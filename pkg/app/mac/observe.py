"""
Opportunistic observation: every uplink OFDMA packet shows the AP a slice of
each transmitting user's channel, on exactly the RU that user was given.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np

from app.channel.csi import Csi
from app.channel.impairments import add_measurement_noise
from app.errors import NoPriorPacket
from app.schemas import Schedule
from app.sra.ru_tree import RuTree


@dataclass
class PacketRecord:
    time_us: int
    schedule: Schedule
    observations: Dict[int, Csi] = field(default_factory=dict)


def record_packet(schedule: Schedule, truth: Mapping[int, Csi], tree: RuTree, time_us: int,
                  measurement_snr_db: Optional[float] = None,
                  rng: Optional[np.random.Generator] = None) -> PacketRecord:
    """The AP's view of one received packet: each user's CSI masked to its RU."""
    if measurement_snr_db is not None and rng is None:
        raise ValueError("measurement noise needs a random generator")
    record = PacketRecord(time_us, schedule)
    for entry in schedule.entries:
        mask = np.zeros(tree.fft_size, dtype=bool)
        mask[tree.columns(entry.ru.node_id)] = True
        for u in entry.users:
            values = truth[u].values
            if measurement_snr_db is not None:
                values = add_measurement_noise(values, measurement_snr_db, rng)
            record.observations[u] = Csi(values, truth[u].wavelengths, truth[u].antenna_spacing,
                                         observed_mask=mask, timestamp_us=time_us)
    return record


def opportunistic_observe(packet: Optional[PacketRecord],
                          groups: Sequence[Sequence[int]]) -> Dict[int, Dict[int, Csi]]:
    """Observed views per group index; an empty map flags the group for pilot fallback."""
    if packet is None:
        raise NoPriorPacket("no uplink packet has been received yet")
    return {g: {u: packet.observations[u] for u in links if u in packet.observations}
            for g, links in enumerate(groups)}


def fallback_groups(observed: Mapping[int, Mapping[int, Csi]]) -> List[int]:
    return [g for g, views in observed.items() if not views]
