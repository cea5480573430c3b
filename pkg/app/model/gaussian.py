"""
Diagonal Gaussians in latent space and their product of experts.

The joint posterior of several views is the standard-normal prior times each
view's Gaussian: precision T = 1 + sum(1/sigma_i^2), mean sum(mu_i/sigma_i^2)/T.
"""

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

SIGMA_FLOOR = 1e-8


@dataclass
class LatentGaussian:
    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=float)
        self.sigma = np.asarray(self.sigma, dtype=float)
        if self.mu.shape != self.sigma.shape:
            raise ValueError("mu and sigma shapes differ")
        if not (np.all(np.isfinite(self.mu)) and np.all(np.isfinite(self.sigma))):
            raise ValueError("latent parameters must be finite")
        if np.any(self.sigma <= 0):
            raise ValueError("sigma must be positive")

    @classmethod
    def prior(cls, z_dim: int) -> "LatentGaussian":
        return cls(np.zeros(z_dim), np.ones(z_dim))

    @property
    def dim(self) -> int:
        return self.mu.shape[-1]


def poe_forward(mus: Sequence[np.ndarray], logvars: Sequence[np.ndarray]) -> Tuple[np.ndarray, np.ndarray, Tuple]:
    """Array form used in training; returns (mu, sigma, cache)."""
    taus = [np.exp(-lv) for lv in logvars]
    total = 1.0 + sum(taus)
    mu = sum(m * t for m, t in zip(mus, taus)) / total
    sigma = total ** -0.5
    return mu, sigma, (mus, taus, total, mu)


def poe_backward(dmu: np.ndarray, dsigma: np.ndarray, cache: Tuple):
    """Gradients of the joint (mu, sigma) back to each expert's (mu_i, logvar_i)."""
    mus, taus, total, mu = cache
    dmus, dlvs = [], []
    for m, t in zip(mus, taus):
        dmus.append(dmu * t / total)
        dtau = dmu * (m - mu) / total - 0.5 * dsigma * total ** -1.5
        dlvs.append(-t * dtau)
    return dmus, dlvs


def combine_poe(experts: Sequence[LatentGaussian], z_dim: int) -> LatentGaussian:
    if not experts:
        return LatentGaussian.prior(z_dim)
    for e in experts:
        if np.any(e.sigma <= 0):
            raise ValueError("expert sigma must be positive")
        if e.mu.shape[-1] != z_dim:
            raise ValueError(f"expert has latent size {e.mu.shape[-1]}, expected {z_dim}")
    mu, sigma, _ = poe_forward([e.mu for e in experts], [2 * np.log(e.sigma) for e in experts])
    return LatentGaussian(mu, sigma)


def sample_latent(g: LatentGaussian, rng: np.random.Generator) -> np.ndarray:
    eps = rng.standard_normal(g.mu.shape)
    return g.mu + np.maximum(g.sigma, SIGMA_FLOOR) * eps


def kl_divergence(q: LatentGaussian) -> float:
    """KL(q || N(0, I)), summed over latent dimensions (and batch rows)."""
    var = q.sigma ** 2
    return float(0.5 * np.sum(var + q.mu ** 2 - 1.0 - np.log(var)))
