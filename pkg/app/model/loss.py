"""
Training objective: alpha * CSI reconstruction + eta * amplitude-weighted path
error + beta * KL to the standard-normal prior, with analytic gradients.

The CSI term is a mean squared error; the path term weights the plain L2
distance of each path's features by its ground-truth amplitude.
"""

from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from app.schemas import ModelConfig


@dataclass
class LossTerms:
    csi: float
    param: float
    kl: float

    @property
    def total(self) -> float:
        return self.csi + self.param + self.kl


def clcp_loss(pred_h: np.ndarray, gt_h: np.ndarray, pred_feats: np.ndarray, gt_feats: np.ndarray,
              gt_amp: np.ndarray, mu: np.ndarray, sigma: np.ndarray,
              cfg: ModelConfig) -> Tuple[LossTerms, Dict[str, np.ndarray]]:
    """Loss of one ELBO term and its gradients.

    Shapes: ``pred_h``/``gt_h`` (N, B, M, S) complex, ``*_feats`` (N, B, L, 4),
    ``gt_amp`` (N, B, L), ``mu``/``sigma`` (B, Z). Padded ground-truth paths
    carry zero amplitude and so no path error. The channel gradient is returned
    as dL/dRe + j dL/dIm.
    """
    if pred_h.shape != gt_h.shape:
        raise ValueError(f"channel shape mismatch: {pred_h.shape} vs {gt_h.shape}")
    if pred_feats.shape != gt_feats.shape or gt_amp.shape != gt_feats.shape[:-1]:
        raise ValueError("path feature shapes do not match")
    if mu.shape != sigma.shape or mu.shape[0] != pred_h.shape[1]:
        raise ValueError("latent shapes do not match the batch")

    batch, subcarriers = pred_h.shape[1], pred_h.shape[-1]
    diff = pred_h - gt_h
    csi = cfg.alpha / (subcarriers * batch) * float(np.sum(np.abs(diff) ** 2))
    d_h = 2 * cfg.alpha / (subcarriers * batch) * diff

    fdiff = pred_feats - gt_feats
    norms = np.sqrt(np.sum(fdiff ** 2, axis=-1))
    param = cfg.eta / batch * float(np.sum(gt_amp * norms))
    # subgradient 0 at an exact match
    unit = np.divide(fdiff, norms[..., None], out=np.zeros_like(fdiff), where=norms[..., None] > 0)
    d_feats = cfg.eta / batch * gt_amp[..., None] * unit

    var = sigma ** 2
    kl = cfg.beta / batch * 0.5 * float(np.sum(var + mu ** 2 - 1.0 - np.log(var)))
    d_mu = cfg.beta / batch * mu
    d_sigma = cfg.beta / batch * (sigma - 1.0 / sigma)

    return LossTerms(csi, param, kl), {"h": d_h, "feats": d_feats, "mu": d_mu, "sigma": d_sigma}
