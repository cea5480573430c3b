"""
Multi-stage training.

Every batch sums the ELBO of several view subsets: all views together, each
view alone, and k random multi-view subsets. The first stage feeds encoders
with full-band paths; the last stage feeds them paths estimated from single
random RUs, the way the access point sees uplink OFDMA packets.
"""

import itertools
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from tqdm import tqdm

from app.errors import DataError, NumericalError
from app.model.dataset import ClcpDataset, stage4_views
from app.model.gaussian import poe_backward, poe_forward
from app.model.loss import clcp_loss
from app.model.network import ClcpModel, features_from_rows
from app.schemas import TrainingRunConfig
from app.utils.log import get_logger, progress_enabled

log = get_logger("TRAINER")

STAGES = ("full", "partial")


@dataclass
class LossRecord:
    epoch: int
    stage: str
    loss: float


class Adam:
    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8,
                 grad_clip: Optional[float] = None):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.grad_clip = grad_clip
        self.t = 0
        self.m: Dict[str, np.ndarray] = {}
        self.v: Dict[str, np.ndarray] = {}

    def step(self, model: ClcpModel) -> float:
        """Apply one update from the model's accumulated gradients; returns the gradient norm."""
        grads = dict(model.named_grads())
        norm = float(np.sqrt(sum(float(np.sum(g ** 2)) for g in grads.values())))
        if not np.isfinite(norm):
            raise NumericalError("non-finite gradient")
        scale = self.grad_clip / norm if self.grad_clip and norm > self.grad_clip else 1.0
        self.t += 1
        for name, p in model.named_parameters():
            g = grads[name] * scale
            m = self.m.setdefault(name, np.zeros_like(p))
            v = self.v.setdefault(name, np.zeros_like(p))
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g ** 2
            m_hat = m / (1 - self.beta1 ** self.t)
            v_hat = v / (1 - self.beta2 ** self.t)
            p -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
        return norm


def default_subset_count(n_links: int) -> int:
    return min(4, 2 ** n_links - n_links - 1)


def view_subsets(n_links: int, k: int, rng: np.random.Generator) -> List[Tuple[int, ...]]:
    """All views, each view alone, then ``k`` random subsets of two or more views."""
    subsets = [tuple(range(n_links))]
    if n_links > 1:
        subsets += [(n,) for n in range(n_links)]
    multi = [c for r in range(2, n_links + 1) for c in itertools.combinations(range(n_links), r)]
    k = min(k, len(multi))
    if k > 0:
        picks = rng.choice(len(multi), size=k, replace=False)
        subsets += [multi[i] for i in sorted(picks)]
    return subsets


def batch_loss(model: ClcpModel, inputs: np.ndarray, gt_h: np.ndarray, gt_feats: np.ndarray,
               gt_amp: np.ndarray, subsets: Sequence[Tuple[int, ...]],
               rng: np.random.Generator, training: bool = True) -> float:
    """Summed ELBO loss over ``subsets``; parameter gradients accumulate in the model.

    ``inputs``/``gt_feats`` are (N, B, L, 4), ``gt_h`` (N, B, M, S), ``gt_amp`` (N, B, L).
    Each encoder runs once; its gradient is the sum over the subsets it joins.
    """
    n_links = model.n_links
    encoded = [model.encoders[n].forward(inputs[n], training) for n in range(n_links)]
    d_mu = [np.zeros_like(e[0]) for e in encoded]
    d_lv = [np.zeros_like(e[1]) for e in encoded]
    total = 0.0
    for subset in subsets:
        mu, sigma, poe_cache = poe_forward([encoded[n][0] for n in subset], [encoded[n][1] for n in subset])
        eps = rng.standard_normal(mu.shape)
        z = mu + sigma * eps
        outs = [model.decoders[n].forward(z, model.grid, training) for n in range(n_links)]
        pred_feats = np.stack([o[0] for o in outs])
        pred_h = np.stack([o[3] for o in outs])
        terms, grads = clcp_loss(pred_h, gt_h, pred_feats, gt_feats, gt_amp, mu, sigma, model.cfg)
        total += terms.total
        dz = np.zeros_like(z)
        for n, o in enumerate(outs):
            dz += model.decoders[n].backward(grads["feats"][n], grads["h"][n], o[4], model.grid)
        dmus, dlvs = poe_backward(grads["mu"] + dz, grads["sigma"] + dz * eps, poe_cache)
        for n, dm, dl in zip(subset, dmus, dlvs):
            d_mu[n] += dm
            d_lv[n] += dl
    for n in range(n_links):
        model.encoders[n].backward(d_mu[n], d_lv[n], encoded[n][2])
    return total


# ---------------------------
# CHECKPOINTS
# ---------------------------

def save_checkpoint(path: Union[str, Path], model: ClcpModel, opt: Adam, epochs_done: int,
                    rng: np.random.Generator, losses: Sequence[LossRecord]) -> None:
    arrays = {f"param:{k}": v for k, v in model.named_parameters()}
    arrays.update({f"buffer:{k}": v for k, v in model.named_buffers()})
    arrays.update({f"adam_m:{k}": v for k, v in opt.m.items()})
    arrays.update({f"adam_v:{k}": v for k, v in opt.v.items()})
    meta = {
        "epochs_done": epochs_done,
        "adam_t": opt.t,
        "rng": rng.bit_generator.state,
        "losses": [[r.epoch, r.stage, r.loss] for r in losses],
        "link_ids": model.link_ids,
    }
    with open(path, "wb") as f:
        np.savez(f, __meta__=np.array(json.dumps(meta)), **arrays)


def load_checkpoint(path: Union[str, Path], model: ClcpModel, opt: Adam,
                    rng: np.random.Generator) -> Tuple[int, List[LossRecord]]:
    try:
        with np.load(path, allow_pickle=False) as data:
            meta = json.loads(str(data["__meta__"]))
            if meta["link_ids"] != model.link_ids:
                raise DataError("checkpoint belongs to a different link group")
            for key in data.files:
                kind, _, name = key.partition(":")
                if kind in ("param", "buffer"):
                    model.set_tensor(name, data[key])
                elif kind == "adam_m":
                    opt.m[name] = np.array(data[key])
                elif kind == "adam_v":
                    opt.v[name] = np.array(data[key])
    except (OSError, KeyError, ValueError) as e:
        if isinstance(e, DataError):
            raise
        raise DataError(f"cannot load checkpoint {path}: {e}") from e
    opt.t = meta["adam_t"]
    rng.bit_generator.state = meta["rng"]
    return meta["epochs_done"], [LossRecord(int(e), s, float(l)) for e, s, l in meta["losses"]]


# ---------------------------
# TRAINING LOOP
# ---------------------------

def train_multistage(dataset: ClcpDataset, cfg: TrainingRunConfig = TrainingRunConfig(),
                     model: Optional[ClcpModel] = None,
                     checkpoint_path: Optional[Union[str, Path]] = None,
                     resume: bool = False) -> Tuple[ClcpModel, List[LossRecord]]:
    """Train (or continue training) a group model; returns it with one loss record per batch."""
    if len(dataset) == 0:
        raise ValueError("cannot train on an empty dataset")
    tc, mc = cfg.train, cfg.model
    if model is None:
        model = ClcpModel(dataset.link_ids, dataset.grid, mc, seed=tc.seed)
    if model.link_ids != list(dataset.link_ids):
        raise DataError(f"model links {model.link_ids} do not match dataset links {dataset.link_ids}")
    if dataset.max_paths != mc.max_paths:
        raise DataError(f"dataset has {dataset.max_paths} path slots, model expects {mc.max_paths}")

    rng = np.random.default_rng(tc.seed)
    opt = Adam(tc.learning_rate, grad_clip=tc.grad_clip)
    k = tc.subsets_k if tc.subsets_k is not None else default_subset_count(dataset.n_links)

    gt_feats = features_from_rows(dataset.rows, mc.distance_scale_m).transpose(1, 0, 2, 3)
    gt_amp = dataset.rows[..., 2].transpose(1, 0, 2)
    gt_h = dataset.csi.transpose(1, 0, 2, 3)
    stage_inputs = {"full": gt_feats[None]}
    if tc.epochs_partial > 0:
        views = stage4_views(dataset, np.random.default_rng([tc.seed, 4]), cfg.estimator,
                             tc.partial_views_per_instant)
        stage_inputs["partial"] = features_from_rows(views, mc.distance_scale_m).transpose(0, 2, 1, 3, 4)

    losses: List[LossRecord] = []
    done = 0
    if resume and checkpoint_path is not None and Path(checkpoint_path).exists():
        done, losses = load_checkpoint(checkpoint_path, model, opt, rng)
        log.info(f"resuming after {done} epochs")

    schedule = [("full", e) for e in range(tc.epochs_full)] + [("partial", e) for e in range(tc.epochs_partial)]
    T = len(dataset)
    bar = tqdm(total=len(schedule), initial=done, desc="train", disable=not progress_enabled())
    for epoch, (stage, stage_epoch) in enumerate(schedule):
        if epoch < done:
            continue
        inputs = stage_inputs[stage]
        view_set = inputs[stage_epoch % inputs.shape[0]]
        order = rng.permutation(T)
        for start in range(0, T, tc.batch_size):
            idx = order[start:start + tc.batch_size]
            model.zero_grad()
            loss = batch_loss(model, view_set[:, idx], gt_h[:, idx], gt_feats[:, idx], gt_amp[:, idx],
                              view_subsets(dataset.n_links, k, rng), rng)
            if not np.isfinite(loss):
                raise NumericalError(f"non-finite loss at epoch {epoch}")
            opt.step(model)
            losses.append(LossRecord(epoch, stage, loss))
        if checkpoint_path is not None:
            save_checkpoint(checkpoint_path, model, opt, epoch + 1, rng, losses)
        bar.update(1)
        log.debug(f"epoch {epoch} ({stage}) mean loss "
                  f"{np.mean([r.loss for r in losses if r.epoch == epoch]):.4e}")
    bar.close()
    return model, losses
