from app.channel.csi import (
    FFT_SIZE,
    SPEED_OF_LIGHT,
    TONE_SPACING_HZ,
    Csi,
    FrequencyGrid,
    Path,
    PathSet,
    synthesize_csi,
    zero_csi,
)
from app.channel.environment import (
    Environment,
    advance,
    build_environment,
    freeze,
    paths_for_link,
)
from app.channel.impairments import RssiSample, compensate, inject_impairments

__all__ = [
    "FFT_SIZE", "SPEED_OF_LIGHT", "TONE_SPACING_HZ",
    "Csi", "FrequencyGrid", "Path", "PathSet", "synthesize_csi", "zero_csi",
    "Environment", "advance", "build_environment", "freeze", "paths_for_link",
    "RssiSample", "compensate", "inject_impairments",
]
