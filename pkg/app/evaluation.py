"""
Evaluation helpers behind ``clcp bench`` and ``clcp report``.

Each helper returns plain rows (lists of dicts) so the CLI can write them
straight to CSV.
"""

import itertools
from collections import defaultdict
from typing import Dict, Iterable, List, Mapping, Optional, Sequence

import numpy as np

from app.channel.csi import Csi, PathSet
from app.errors import DataError
from app.mac.frames import sounding_cost
from app.model.dataset import ClcpDataset
from app.model.network import ClcpModel
from app.phy.capacity import ru_capacity
from app.phy.detection import ber_sweep
from app.phy.metrics import evm
from app.phy.rate import select_mcs
from app.schemas import DetectionMethod, Mode, SimConfig, SimMetrics
from app.sra.pools import UserDemand
from app.sra.ru_tree import RuTree
from app.sra.scheduler import schedule_uplink
from app.utils.log import get_logger

log = get_logger("EVAL")

Row = Dict[str, object]

# ---------------------------
# PREDICTION QUALITY
# ---------------------------


def evm_by_observed_views(model: ClcpModel, dataset: ClcpDataset,
                          views: Optional[np.ndarray] = None,
                          max_subsets: int = 16) -> Dict[int, float]:
    """Mean EVM (dB) of the unobserved links' predictions, per number of observed views.

    ``views`` are the path rows fed to the encoders, shaped like
    ``dataset.rows`` (ground-truth paths when omitted). With every link
    observed the score covers all links.
    """
    rows = dataset.rows if views is None else np.asarray(views, dtype=float)
    if rows.shape != dataset.rows.shape:
        raise DataError(f"views have shape {rows.shape}, expected {dataset.rows.shape}")
    links = list(dataset.link_ids)
    n = len(links)
    out: Dict[int, float] = {}
    for k in range(1, n + 1):
        subsets = list(itertools.combinations(range(n), k))[:max_subsets]
        scores = []
        for t in range(len(dataset)):
            for subset in subsets:
                observed = {links[i]: PathSet.from_array(rows[t, i], dataset.max_paths) for i in subset}
                targets = [i for i in range(n) if i not in subset] or list(range(n))
                pred = model.predict(observed, [links[i] for i in targets], strict=False)
                scores.extend(evm(pred[links[i]], dataset.csi_at(t, i)) for i in targets)
        out[k] = float(np.mean(scores))
        log.debug(f"{k} observed views: {out[k]:.2f} dB over {len(scores)} predictions")
    return out


def capacity_fidelity(predicted: Mapping[int, Csi], truth: Mapping[int, Csi],
                      bsr_bytes: Mapping[int, int], tree: RuTree, noise_power: float,
                      n_t: int = 1, exact_user_limit: int = 6) -> float:
    """True capacity of the schedule chosen on predicted CSI over that of the ground-truth schedule."""
    if set(predicted) != set(truth):
        raise ValueError("predicted and ground-truth CSI must cover the same links")
    usable = np.nonzero(tree.usable_mask())[0]

    def plan(csis: Mapping[int, Csi]):
        demands = [UserDemand(u, bsr_bytes[u], select_mcs(csis[u], noise_power, columns=usable))
                   for u in sorted(csis)]
        return schedule_uplink(demands, csis, tree, n_t=n_t, noise_power=noise_power,
                               exact_user_limit=exact_user_limit)

    ideal = ru_capacity(plan(truth), truth, noise_power, tree=tree)
    if ideal <= 0:
        raise ValueError("ground-truth schedule has zero capacity")
    return ru_capacity(plan(predicted), truth, noise_power, tree=tree) / ideal


# ---------------------------
# DETECTION AND OVERHEAD
# ---------------------------


def detection_ber_sweep(snrs_db: Sequence[float], n_symbols: int, seed: int = 0,
                        methods: Iterable[DetectionMethod] = tuple(DetectionMethod),
                        n_rx: int = 2, n_users: int = 2, modulation: str = "QPSK") -> List[Row]:
    curves = ber_sweep(methods, snrs_db, n_symbols, seed, n_rx, n_users, modulation)
    rows = []
    for method, stats in curves.items():
        for snr, s in zip(snrs_db, stats):
            rows.append({"method": method, "snr_db": float(snr), "ber": s.ber, "ci95": s.ci95,
                         "bit_errors": s.errors, "bits": s.bits})
    return rows


def overhead_fraction(mode: Mode, users: int, tones: Optional[int], cfg: SimConfig,
                      pilot_users: int = 0) -> float:
    """Share of each acquisition cycle spent sounding: sounding / (sounding + feedback period)."""
    cost = sounding_cost(mode, users, cfg, pilot_users=pilot_users, tones=tones)
    period_us = cfg.feedback_period_ms * 1000
    return cost.airtime_us / (cost.airtime_us + period_us)


# ---------------------------
# METRICS FILES
# ---------------------------


def per_distribution(metrics: SimMetrics) -> List[Row]:
    return [{"mode": metrics.mode.value, "seed": metrics.seed, "time_us": r.time_us, "user": r.user,
             "mcs": r.mcs, "per": r.per, "mpdus": r.mpdus, "delivered": r.delivered}
            for r in metrics.per_records]


def rate_distribution(metrics: SimMetrics) -> List[Row]:
    return [{"mode": metrics.mode.value, "seed": metrics.seed, "time_us": r.time_us, "user": r.user,
             "mcs": r.mcs, "rate_bps": r.rate_bps}
            for r in metrics.per_records]


def _by_mode(runs: Sequence[SimMetrics]) -> Dict[str, List[SimMetrics]]:
    grouped: Dict[str, List[SimMetrics]] = defaultdict(list)
    for m in runs:
        grouped[m.mode.value].append(m)
    return grouped


def summary_rows(runs: Sequence[SimMetrics]) -> List[Row]:
    """Per-mode means; ratios are against baseline, or the first mode read when baseline is absent."""
    if not runs:
        raise ValueError("report needs at least one metrics run")
    grouped = _by_mode(runs)
    reference = Mode.BASELINE.value if Mode.BASELINE.value in grouped else runs[0].mode.value
    mean_tput = {mode: float(np.mean([m.throughput_bps for m in ms])) for mode, ms in grouped.items()}
    ref = mean_tput[reference]
    rows = []
    for mode, ms in grouped.items():
        wakes = [w for m in ms for w in m.wake_counts.values()]
        sleep = [s for m in ms for s in m.sleep_fractions.values()]
        energy = [e for m in ms for e in m.energy_j.values()]
        rows.append({
            "mode": mode,
            "runs": len(ms),
            "throughput_bps": mean_tput[mode],
            "ratio_vs_" + reference: mean_tput[mode] / ref if ref > 0 else float("nan"),
            "sounding_fraction": float(np.mean([m.sounding_fraction for m in ms])),
            "mean_wakes": float(np.mean(wakes)) if wakes else 0.0,
            "mean_sleep_fraction": float(np.mean(sleep)) if sleep else 1.0,
            "mean_energy_j": float(np.mean(energy)) if energy else 0.0,
        })
    return rows


def evm_rows(runs: Sequence[SimMetrics], quantiles: Sequence[float] = (0.1, 0.5, 0.9)) -> List[Row]:
    rows = []
    for mode, ms in _by_mode(runs).items():
        values = [r.evm_db for m in ms for r in m.evm_records]
        row: Row = {"mode": mode, "count": len(values)}
        for q in quantiles:
            row[f"p{int(round(q * 100))}_db"] = float(np.quantile(values, q)) if values else float("nan")
        rows.append(row)
    return rows


def window_rows(runs: Sequence[SimMetrics]) -> List[Row]:
    return [{"mode": m.mode.value, "seed": m.seed, "window_start_ms": w.window_start_ms,
             "throughput_bps": w.throughput_bps, "sounding_fraction": w.sounding_fraction}
            for m in runs for w in m.windows]


def twt_rows(runs: Sequence[SimMetrics]) -> List[Row]:
    return [{"mode": m.mode.value, "seed": m.seed, "user": u, "wakes": m.wake_counts[u],
             "sleep_fraction": m.sleep_fractions[u], "energy_j": m.energy_j[u]}
            for m in runs for u in sorted(m.wake_counts)]
