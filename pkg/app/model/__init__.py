"""Cross-link channel prediction model: numpy layers, PoE latent, training and I/O."""

from app.model.gaussian import LatentGaussian, combine_poe, kl_divergence, sample_latent
from app.model.network import ClcpModel

__all__ = ["ClcpModel", "LatentGaussian", "combine_poe", "kl_divergence", "sample_latent"]
