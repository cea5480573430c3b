"""
Channel containers and the multipath synthesis kernel.

A link's channel at antenna i and wavelength lam is the sum over paths of
``a * exp(-j*2*pi*d/lam + j*phi) * exp(-j*2*pi*i*k*cos(theta)/lam)`` where k is
the antenna spacing of the AP's uniform linear array.
"""

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path as FsPath
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT

from app.errors import DataError

TONE_SPACING_HZ = 78_125.0
FFT_SIZE = {20: 256, 40: 512, 80: 1024, 160: 2048}
DEFAULT_CENTER_HZ = 5.5e9


# ---------------------------
# FREQUENCY GRID
# ---------------------------

@dataclass(frozen=True, eq=False)
class FrequencyGrid:
    """Receive array size and per-subcarrier wavelengths of one radio configuration."""

    antennas: int
    wavelengths: np.ndarray
    antenna_spacing: float
    bandwidth_mhz: Optional[int] = None

    def __post_init__(self):
        lam = np.asarray(self.wavelengths, dtype=float)
        if self.antennas < 1:
            raise ValueError("grid needs at least one antenna")
        if lam.ndim != 1 or lam.size == 0:
            raise ValueError("wavelengths must be a non-empty vector")
        if np.any(lam <= 0):
            raise ValueError("wavelengths must be positive")
        if lam.size > 1 and np.any(np.diff(lam) >= 0):
            raise ValueError("wavelengths must be strictly decreasing")
        if self.antenna_spacing <= 0:
            raise ValueError("antenna spacing must be positive")
        object.__setattr__(self, "wavelengths", lam)

    @classmethod
    def for_bandwidth(cls, bandwidth_mhz: int, antennas: int = 4,
                      center_freq_hz: float = DEFAULT_CENTER_HZ) -> "FrequencyGrid":
        if bandwidth_mhz not in FFT_SIZE:
            raise ValueError(f"Unsupported bandwidth: {bandwidth_mhz} MHz")
        size = FFT_SIZE[bandwidth_mhz]
        freqs = center_freq_hz + (np.arange(size) - size // 2) * TONE_SPACING_HZ
        return cls(antennas, SPEED_OF_LIGHT / freqs, SPEED_OF_LIGHT / center_freq_hz / 2,
                   bandwidth_mhz)

    @classmethod
    def from_frequencies(cls, freqs_hz: Sequence[float], antennas: int = 4,
                         antenna_spacing: Optional[float] = None) -> "FrequencyGrid":
        freqs = np.asarray(freqs_hz, dtype=float)
        if antenna_spacing is None:
            antenna_spacing = SPEED_OF_LIGHT / (0.5 * (freqs.min() + freqs.max())) / 2
        return cls(antennas, SPEED_OF_LIGHT / freqs, antenna_spacing)

    @property
    def subcarriers(self) -> int:
        return self.wavelengths.size

    @property
    def frequencies(self) -> np.ndarray:
        return SPEED_OF_LIGHT / self.wavelengths

    @property
    def center_frequency(self) -> float:
        f = self.frequencies
        return 0.5 * (f[0] + f[-1])

    @property
    def tone_spacing(self) -> float:
        f = self.frequencies
        return float((f[-1] - f[0]) / (f.size - 1)) if f.size > 1 else TONE_SPACING_HZ

    @property
    def bandwidth_hz(self) -> float:
        return self.tone_spacing * self.subcarriers

    def key(self) -> Tuple:
        return (self.antennas, self.antenna_spacing, self.wavelengths.tobytes())


# ---------------------------
# PATHS
# ---------------------------

@dataclass(frozen=True)
class Path:
    theta: float
    d: float
    a: float
    phi: float


PathLike = Union[Path, Tuple[float, float, float, float]]

_ANGLE_TOL = 1e-9


class PathSet:
    """Up to ``capacity`` paths kept in canonical order (descending attenuation)."""

    def __init__(self, paths: Iterable[PathLike] = (), capacity: int = 8):
        items = [p if isinstance(p, Path) else Path(*map(float, p)) for p in paths]
        if len(items) > capacity:
            raise ValueError(f"{len(items)} paths exceed capacity {capacity}")
        for p in items:
            if not (-_ANGLE_TOL <= p.theta <= math.pi + _ANGLE_TOL):
                raise ValueError(f"theta out of [0, pi]: {p.theta}")
            if p.d < 0:
                raise ValueError(f"negative path length: {p.d}")
            if not (0.0 < p.a <= 1.0):
                raise ValueError(f"attenuation out of (0, 1]: {p.a}")
            if not (-math.pi - _ANGLE_TOL <= p.phi <= math.pi + _ANGLE_TOL):
                raise ValueError(f"phase out of [-pi, pi]: {p.phi}")
        self.capacity = capacity
        # stable sort keeps equal-amplitude paths in insertion order
        self.paths: List[Path] = sorted(items, key=lambda p: -p.a)

    @classmethod
    def strongest(cls, paths: Iterable[PathLike], capacity: int = 8) -> "PathSet":
        items = [p if isinstance(p, Path) else Path(*map(float, p)) for p in paths]
        items.sort(key=lambda p: -p.a)
        return cls(items[:capacity], capacity)

    @classmethod
    def from_array(cls, rows: np.ndarray, capacity: int = 8) -> "PathSet":
        rows = np.asarray(rows, dtype=float).reshape(-1, 4)
        return cls([Path(*r) for r in rows if r[2] > 0], capacity)

    def __len__(self) -> int:
        return len(self.paths)

    def __iter__(self) -> Iterator[Path]:
        return iter(self.paths)

    def __getitem__(self, i: int) -> Path:
        return self.paths[i]

    def __repr__(self) -> str:
        return f"PathSet({len(self)}/{self.capacity})"

    def union(self, other: "PathSet") -> "PathSet":
        return PathSet(self.paths + other.paths, self.capacity + other.capacity)

    def as_array(self) -> np.ndarray:
        """Rows of (theta, d, a, phi); shape (len, 4)."""
        if not self.paths:
            return np.zeros((0, 4))
        return np.array([[p.theta, p.d, p.a, p.phi] for p in self.paths], dtype=float)

    def to_csv(self, path: Union[str, FsPath]) -> None:
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(["theta", "d", "a", "phi"])
            for p in self.paths:
                writer.writerow([repr(p.theta), repr(p.d), repr(p.a), repr(p.phi)])

    @classmethod
    def from_csv(cls, path: Union[str, FsPath], capacity: int = 8) -> "PathSet":
        try:
            with open(path, newline="", encoding="utf-8") as f:
                rows = list(csv.DictReader(f))
            return cls([Path(float(r["theta"]), float(r["d"]), float(r["a"]), float(r["phi"]))
                        for r in rows], capacity)
        except (KeyError, ValueError) as e:
            raise DataError(f"bad PathSet CSV {path}: {e}") from e


# ---------------------------
# CSI
# ---------------------------

@dataclass
class Csi:
    values: np.ndarray
    wavelengths: np.ndarray
    antenna_spacing: float
    observed_mask: Optional[np.ndarray] = None
    timestamp_us: int = 0
    stale_age_us: int = 0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        self.wavelengths = np.asarray(self.wavelengths, dtype=float)
        if self.values.ndim != 2:
            raise ValueError("CSI values must be an (antennas, subcarriers) matrix")
        if self.wavelengths.shape != (self.values.shape[1],):
            raise ValueError("wavelength vector does not match subcarrier count")
        if self.wavelengths.size > 1 and np.any(np.diff(self.wavelengths) >= 0):
            raise ValueError("wavelengths must be strictly decreasing")
        if self.observed_mask is None:
            self.observed_mask = np.ones(self.values.shape[1], dtype=bool)
        else:
            self.observed_mask = np.asarray(self.observed_mask, dtype=bool)
            if self.observed_mask.shape != (self.values.shape[1],):
                raise ValueError("observed mask does not match subcarrier count")

    @property
    def antennas(self) -> int:
        return self.values.shape[0]

    @property
    def subcarriers(self) -> int:
        return self.values.shape[1]

    @property
    def grid(self) -> FrequencyGrid:
        return FrequencyGrid(self.antennas, self.wavelengths, self.antenna_spacing)

    @property
    def is_full_band(self) -> bool:
        return bool(self.observed_mask.all())

    def observed(self) -> np.ndarray:
        return self.values[:, self.observed_mask]

    def with_values(self, values: np.ndarray, **changes) -> "Csi":
        return replace(self, values=values, **changes)

    def masked(self, mask: np.ndarray) -> "Csi":
        return replace(self, values=self.values.copy(), observed_mask=np.asarray(mask, dtype=bool))

    def power(self) -> float:
        obs = self.observed()
        return float(np.sum(np.abs(obs) ** 2))


def zero_csi(grid: FrequencyGrid, timestamp_us: int = 0) -> Csi:
    return Csi(np.zeros((grid.antennas, grid.subcarriers), dtype=complex),
               grid.wavelengths, grid.antenna_spacing, timestamp_us=timestamp_us)


# ---------------------------
# SYNTHESIS
# ---------------------------

def path_terms(theta: np.ndarray, d: np.ndarray, phi: np.ndarray,
               grid: FrequencyGrid) -> np.ndarray:
    """Unit-amplitude per-path responses, shape ``theta.shape + (M, S)``.

    Inputs broadcast together; the trailing two axes index antenna and subcarrier.
    """
    theta = np.asarray(theta, dtype=float)[..., None, None]
    d = np.asarray(d, dtype=float)[..., None, None]
    phi = np.asarray(phi, dtype=float)[..., None, None]
    inv_lam = 1.0 / grid.wavelengths
    ant = np.arange(grid.antennas, dtype=float)[:, None]
    psi = phi - 2 * np.pi * d * inv_lam - 2 * np.pi * ant * grid.antenna_spacing * np.cos(theta) * inv_lam
    return np.exp(1j * psi)


def synthesize_values(rows: np.ndarray, grid: FrequencyGrid) -> np.ndarray:
    rows = np.asarray(rows, dtype=float).reshape(-1, 4)
    terms = path_terms(rows[:, 0], rows[:, 1], rows[:, 3], grid)
    return np.einsum("l,lms->ms", rows[:, 2], terms)


def synthesize_csi(ps: PathSet, grid: FrequencyGrid, timestamp_us: int = 0) -> Csi:
    if len(ps) == 0:
        raise ValueError("cannot synthesize an empty PathSet")
    return Csi(synthesize_values(ps.as_array(), grid), grid.wavelengths,
               grid.antenna_spacing, timestamp_us=timestamp_us)
