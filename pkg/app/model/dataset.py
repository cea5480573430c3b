"""
Time-aligned training instants for one link group, and the partial-band views
used in the last training stage.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from app.channel.csi import Csi, FrequencyGrid, synthesize_values
from app.channel.environment import Environment, advance, paths_for_link
from app.channel.impairments import add_measurement_noise
from app.channel.trace import Trace
from app.errors import DataError
from app.estimator import estimate_paths
from app.model.network import padded_rows
from app.schemas import EstimatorConfig
from app.sra.ru_tree import build_ru_tree


@dataclass
class ClcpDataset:
    link_ids: List[int]
    grid: FrequencyGrid
    rows: np.ndarray            # (T, N, L, 4) ground-truth paths, zero-padded
    csi: np.ndarray             # (T, N, M, S)
    timestamps_us: np.ndarray   # (T,)

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=float)
        self.csi = np.asarray(self.csi, dtype=complex)
        self.timestamps_us = np.asarray(self.timestamps_us, dtype=np.int64)
        t, n = len(self.timestamps_us), len(self.link_ids)
        if self.rows.ndim != 4 or self.rows.shape[:2] != (t, n) or self.rows.shape[3] != 4:
            raise DataError(f"path rows have shape {self.rows.shape}, expected ({t}, {n}, L, 4)")
        if self.csi.shape != (t, n, self.grid.antennas, self.grid.subcarriers):
            raise DataError(f"CSI block has shape {self.csi.shape}, does not match grid and links")

    def __len__(self) -> int:
        return len(self.timestamps_us)

    @property
    def n_links(self) -> int:
        return len(self.link_ids)

    @property
    def max_paths(self) -> int:
        return self.rows.shape[2]

    def subset(self, index: Sequence[int]) -> "ClcpDataset":
        index = np.asarray(index, dtype=int)
        return ClcpDataset(list(self.link_ids), self.grid, self.rows[index],
                           self.csi[index], self.timestamps_us[index])

    def select_links(self, link_ids: Sequence[int]) -> "ClcpDataset":
        """The same instants restricted to ``link_ids``, in that order."""
        missing = [l for l in link_ids if l not in self.link_ids]
        if missing:
            raise DataError(f"links {missing} are not in the dataset")
        idx = [self.link_ids.index(l) for l in link_ids]
        return ClcpDataset(list(link_ids), self.grid, self.rows[:, idx], self.csi[:, idx], self.timestamps_us)

    def split(self, train_fraction: float = 0.8) -> Tuple["ClcpDataset", "ClcpDataset"]:
        """Chronological split; held-out instants come after the training ones."""
        cut = int(round(len(self) * train_fraction))
        return self.subset(range(cut)), self.subset(range(cut, len(self)))

    def csi_at(self, t: int, n: int) -> Csi:
        return Csi(self.csi[t, n], self.grid.wavelengths, self.grid.antenna_spacing,
                   timestamp_us=int(self.timestamps_us[t]))


def build_dataset(env: Environment, grid: FrequencyGrid, n_instants: int,
                  sample_period_s: float, links: Optional[Sequence[int]] = None,
                  max_paths: int = 8, measurement_snr_db: Optional[float] = None,
                  rng: Optional[np.random.Generator] = None) -> ClcpDataset:
    """Sample the moving environment; targets are the true paths and channels."""
    if n_instants < 1:
        raise ValueError("n_instants must be positive")
    ids = list(links) if links is not None else env.link_ids()
    if measurement_snr_db is not None and rng is None:
        rng = np.random.default_rng(env.rng_seed)
    rows = np.zeros((n_instants, len(ids), max_paths, 4))
    csi = np.zeros((n_instants, len(ids), grid.antennas, grid.subcarriers), dtype=complex)
    stamps = np.zeros(n_instants, dtype=np.int64)
    for t in range(n_instants):
        stamps[t] = int(round(t * sample_period_s * 1e6))
        for n, link in enumerate(ids):
            ps = paths_for_link(env, link)
            rows[t, n] = padded_rows(ps, max_paths)
            h = synthesize_values(ps.as_array(), grid)
            if measurement_snr_db is not None:
                h = add_measurement_noise(h, measurement_snr_db, rng)
            csi[t, n] = h
        env = advance(env, sample_period_s)
    return ClcpDataset(ids, grid, rows, csi, stamps)


def dataset_from_trace(trace: Trace, grid: FrequencyGrid, links: Optional[Sequence[int]] = None,
                       est_cfg: EstimatorConfig = EstimatorConfig(),
                       max_paths: int = 8) -> ClcpDataset:
    """Rebuild instants from a recorded trace; path targets come from full-band estimation.

    ``links`` names the trace's link columns in order.
    """
    hdr = trace.header
    if (hdr.antennas, hdr.subcarriers) != (grid.antennas, grid.subcarriers):
        raise DataError("trace dimensions do not match the frequency grid")
    ids = list(links) if links is not None else list(range(hdr.links))
    if len(ids) != hdr.links:
        raise DataError(f"{len(ids)} link ids given for a {hdr.links}-link trace")
    rows = np.zeros((hdr.samples, hdr.links, max_paths, 4))
    for t in range(hdr.samples):
        for n in range(hdr.links):
            csi = Csi(trace.values[t, n], grid.wavelengths, grid.antenna_spacing)
            rows[t, n] = padded_rows(estimate_paths(csi, est_cfg), max_paths)
    return ClcpDataset(ids, grid, rows, trace.values, trace.timestamps_us[:, 0])


def stage4_views(dataset: ClcpDataset, rng: np.random.Generator,
                 est_cfg: EstimatorConfig = EstimatorConfig(), views: int = 1) -> np.ndarray:
    """Paths estimated from one random RU of each ground-truth channel.

    Returns (views, T, N, L, 4). Needs a grid built for a standard bandwidth.
    """
    if dataset.grid.bandwidth_mhz is None:
        raise DataError("partial-band views need a grid with a standard bandwidth")
    tree = build_ru_tree(dataset.grid.bandwidth_mhz)
    candidates = [n for n in tree.nodes if n != tree.root]
    out = np.zeros((views,) + dataset.rows.shape)
    for v in range(views):
        for t in range(len(dataset)):
            for n in range(dataset.n_links):
                node = candidates[rng.integers(len(candidates))]
                mask = np.zeros(dataset.grid.subcarriers, dtype=bool)
                mask[tree.columns(node)] = True
                partial = dataset.csi_at(t, n).masked(mask)
                out[v, t, n] = padded_rows(estimate_paths(partial, est_cfg), dataset.max_paths)
    return out
