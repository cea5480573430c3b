"""CSV exports: latent means for external visualization and training loss logs."""

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np

from app.model.dataset import ClcpDataset
from app.model.network import ClcpModel, features_from_rows
from app.model.trainer import LossRecord


@dataclass
class LatentRow:
    link_id: int
    timestamp_us: int
    mu: np.ndarray


def export_latents(dataset: ClcpDataset, model: ClcpModel) -> List[LatentRow]:
    """Eval-mode encoder means for every (instant, link) of the dataset."""
    feats = features_from_rows(dataset.rows, model.cfg.distance_scale_m)
    rows: List[LatentRow] = []
    mus = []
    for n, link in enumerate(dataset.link_ids):
        mu, _, _ = model.encoders[model.index_of(link)].forward(feats[:, n], training=False)
        mus.append(mu)
    for t, stamp in enumerate(dataset.timestamps_us):
        for n, link in enumerate(dataset.link_ids):
            rows.append(LatentRow(int(link), int(stamp), mus[n][t]))
    return rows


def write_latents_csv(rows: Sequence[LatentRow], path: Union[str, Path]) -> None:
    z = rows[0].mu.size if rows else 0
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["link_id", "timestamp_us"] + [f"mu{i}" for i in range(z)])
        for r in rows:
            writer.writerow([r.link_id, r.timestamp_us] + [repr(float(v)) for v in r.mu])


def epoch_losses(records: Sequence[LossRecord]) -> List[LossRecord]:
    """Mean batch loss per (epoch, stage), in training order."""
    grouped: Dict[Tuple[int, str], List[float]] = {}
    for r in records:
        grouped.setdefault((r.epoch, r.stage), []).append(r.loss)
    return [LossRecord(epoch, stage, float(np.mean(values))) for (epoch, stage), values in grouped.items()]


def write_loss_log(records: Sequence[LossRecord], path: Union[str, Path]) -> None:
    """One row per (epoch, stage) with the mean batch loss."""
    write_batch_loss_log(epoch_losses(records), path)


def write_batch_loss_log(records: Sequence[LossRecord], path: Union[str, Path]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["epoch", "stage", "loss"])
        for r in records:
            writer.writerow([r.epoch, r.stage, repr(float(r.loss))])
