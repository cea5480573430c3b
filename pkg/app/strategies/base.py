from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np

from app.channel.csi import Csi, FrequencyGrid
from app.channel.impairments import add_measurement_noise
from app.mac.frames import Frame
from app.mac.observe import PacketRecord
from app.phy.metrics import evm
from app.schemas import EvmRecord, Mode, SimConfig
from app.sra.ru_tree import RuTree


@dataclass
class RoundState:
    now_us: int
    truth: Mapping[int, Csi]
    last_packet: Optional[PacketRecord] = None


@dataclass
class Acquisition:
    frames: List[Frame] = field(default_factory=list)
    csis: Dict[int, Csi] = field(default_factory=dict)
    evm_records: List[EvmRecord] = field(default_factory=list)


class BaseStrategy:
    """One way of getting fresh CSI for the users of an uplink round."""

    mode: Mode

    def __init__(self, cfg: SimConfig, tree: RuTree, grid: FrequencyGrid, rng: np.random.Generator):
        self.cfg = cfg
        self.tree = tree
        self.grid = grid
        self.rng = rng

    def refresh_interval_us(self) -> int:
        return int(round(self.cfg.coherence_ms * 1000))

    def acquire(self, state: RoundState, users: Sequence[int]) -> Acquisition:
        raise NotImplementedError

    def _measure(self, csi: Csi, mask: Optional[np.ndarray] = None) -> Csi:
        values = add_measurement_noise(csi.values, self.cfg.measurement_snr_db, self.rng)
        return Csi(values, csi.wavelengths, csi.antenna_spacing, observed_mask=mask,
                   timestamp_us=csi.timestamp_us)

    def _ru_mask(self, node_id: str) -> np.ndarray:
        mask = np.zeros(self.tree.fft_size, dtype=bool)
        mask[self.tree.columns(node_id)] = True
        return mask

    def _evm_records(self, state: RoundState, csis: Mapping[int, Csi]) -> List[EvmRecord]:
        out = []
        for link, pred in csis.items():
            truth = state.truth[link]
            if truth.power() > 0:
                out.append(EvmRecord(time_us=state.now_us, link=link, evm_db=evm(pred, truth),
                                     source=self.mode.value))
        return out
