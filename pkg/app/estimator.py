"""
Maximum-likelihood path extraction from (possibly partial-band) CSI.

Greedy matching pursuit over an (angle, path length) dictionary, joint least
squares for the complex gains, then cyclic refinement where each path's
(angle, length) is re-optimised against the residual left by the others.
Path lengths are reported modulo the unambiguous range c / tone spacing.
"""

from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np
from cachetools import LRUCache, cached
from cachetools.keys import hashkey
from scipy.optimize import minimize

from app.channel.csi import SPEED_OF_LIGHT, Csi, FrequencyGrid, Path, PathSet, synthesize_values
from app.errors import DataError
from app.schemas import EstimatorConfig
from app.utils.log import get_logger

log = get_logger("ESTIMATOR")

ANGLE_WINDOW_RAD = 0.35
DELAY_WINDOW_STEPS = 1.5

_DICTIONARY_CACHE = LRUCache(maxsize=32)


@dataclass
class EstimateTrace:
    """Residual power fraction after each greedy extraction and after refinement."""

    greedy: List[float] = field(default_factory=list)
    refined: float = 1.0
    clamped: int = 0


def delay_step(cfg: EstimatorConfig, grid: FrequencyGrid) -> float:
    return cfg.delay_grid_step_m or SPEED_OF_LIGHT / (2 * grid.bandwidth_hz)


def search_grid(cfg: EstimatorConfig, grid: FrequencyGrid) -> Tuple[np.ndarray, np.ndarray]:
    step = delay_step(cfg, grid)
    delays = np.arange(0.0, cfg.max_delay_m + step / 2, step)
    thetas = np.minimum(np.arange(0.0, np.pi + cfg.angle_grid_step_rad / 2,
                                  cfg.angle_grid_step_rad), np.pi)
    return thetas, delays


@cached(_DICTIONARY_CACHE,
        key=lambda grid, mask, thetas, delays: hashkey(grid.key(), mask.tobytes(),
                                                       thetas.tobytes(), delays.tobytes()))
def _dictionaries(grid: FrequencyGrid, mask: np.ndarray, thetas: np.ndarray,
                  delays: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    inv_lam = 1.0 / grid.wavelengths[mask]
    ant_k = np.arange(grid.antennas) * grid.antenna_spacing
    angle_atoms = np.exp(-2j * np.pi * ant_k[None, :, None] * np.cos(thetas)[:, None, None]
                         * inv_lam[None, None, :])
    delay_atoms = np.exp(-2j * np.pi * inv_lam[:, None] * delays[None, :])
    return angle_atoms, delay_atoms


def _atom(theta: float, d: float, ant_k: np.ndarray, inv_lam: np.ndarray) -> np.ndarray:
    return np.exp(-2j * np.pi * (d + ant_k * np.cos(theta))[:, None] * inv_lam[None, :])


def _solve_gains(atoms: List[np.ndarray], observed: np.ndarray) -> np.ndarray:
    basis = np.stack([g.ravel() for g in atoms], axis=1)
    gains, *_ = np.linalg.lstsq(basis, observed.ravel(), rcond=None)
    return gains


def _refine_path(theta: float, d: float, resid: np.ndarray, ant_k: np.ndarray,
                 inv_lam: np.ndarray, scale: np.ndarray, max_delay: float) -> Tuple[float, float]:
    norm = abs(np.vdot(_atom(theta, d, ant_k, inv_lam), resid)) ** 2
    if norm == 0:
        return theta, d

    def objective(x):
        th, dd = x * scale
        w = np.conj(_atom(th, dd, ant_k, inv_lam)) * resid
        c = w.sum()
        dc_dth = np.sum((2j * np.pi * (-ant_k * np.sin(th)))[:, None] * inv_lam[None, :] * w)
        dc_dd = np.sum(2j * np.pi * inv_lam[None, :] * w)
        grad = -2 * np.real(np.conj(c) * np.array([dc_dth, dc_dd])) * scale
        return -abs(c) ** 2 / norm, grad / norm

    bounds = [
        (max(0.0, theta - ANGLE_WINDOW_RAD) / scale[0], min(np.pi, theta + ANGLE_WINDOW_RAD) / scale[0]),
        (max(0.0, d - DELAY_WINDOW_STEPS * scale[1]) / scale[1],
         min(max_delay, d + DELAY_WINDOW_STEPS * scale[1]) / scale[1]),
    ]
    x0 = np.clip(np.array([theta, d]) / scale, [b[0] for b in bounds], [b[1] for b in bounds])
    res = minimize(objective, x0, jac=True, method="L-BFGS-B", bounds=bounds,
                   options={"ftol": 1e-15, "gtol": 1e-12, "maxiter": 100})
    th, dd = res.x * scale
    if res.fun > objective(x0)[0]:
        th, dd = x0 * scale
    return float(th), float(dd)


def _to_pathset(params: List[Tuple[float, float]], gains: np.ndarray, capacity: int,
                trace: EstimateTrace) -> PathSet:
    paths = []
    for (theta, d), g in zip(params, gains):
        a = float(abs(g))
        if a <= 0:
            continue
        if a > 1.0:
            trace.clamped += 1
            log.warning(f"fitted gain {a:.3f} at theta={theta:.3f} d={d:.2f} m clamped to 1")
        paths.append(Path(float(np.clip(theta, 0.0, np.pi)), max(float(d), 0.0),
                          min(a, 1.0), float(np.angle(g))))
    return PathSet.strongest(paths, capacity)


def estimate_with_trace(csi: Csi, cfg: EstimatorConfig = EstimatorConfig()) -> Tuple[PathSet, EstimateTrace]:
    mask = csi.observed_mask
    if not mask.any():
        raise ValueError("estimate_paths needs at least one observed subcarrier")
    observed = csi.observed()
    total = float(np.sum(np.abs(observed) ** 2))
    trace = EstimateTrace()
    if total == 0:
        trace.refined = 0.0
        return PathSet([], cfg.l_max), trace

    grid = csi.grid
    thetas, delays = search_grid(cfg, grid)
    angle_atoms, delay_atoms = _dictionaries(grid, mask, thetas, delays)
    inv_lam = 1.0 / grid.wavelengths[mask]
    ant_k = np.arange(grid.antennas) * grid.antenna_spacing
    scale = np.array([cfg.angle_grid_step_rad, delay_step(cfg, grid)])

    params: List[Tuple[float, float]] = []
    atoms: List[np.ndarray] = []
    gains = np.zeros(0, dtype=complex)
    resid = observed.copy()
    for _ in range(cfg.l_max):
        if np.sum(np.abs(resid) ** 2) / total <= cfg.residual_stop:
            break
        proj = np.einsum("tms,ms->ts", np.conj(angle_atoms), resid)
        corr = np.abs(proj @ np.conj(delay_atoms))
        t_idx, d_idx = np.unravel_index(np.argmax(corr), corr.shape)
        params.append((float(thetas[t_idx]), float(delays[d_idx])))
        atoms.append(_atom(*params[-1], ant_k, inv_lam))
        gains = _solve_gains(atoms, observed)
        resid = observed - np.einsum("l,lms->ms", gains, np.stack(atoms))
        trace.greedy.append(float(np.sum(np.abs(resid) ** 2) / total))

    last = trace.greedy[-1] if trace.greedy else 1.0
    for sweep in range(cfg.refine_iters):
        for j in range(len(params)):
            others = resid + gains[j] * atoms[j]
            params[j] = _refine_path(*params[j], others, ant_k, inv_lam, scale, cfg.max_delay_m)
            atoms[j] = _atom(*params[j], ant_k, inv_lam)
            gains = _solve_gains(atoms, observed)
            resid = observed - np.einsum("l,lms->ms", gains, np.stack(atoms))
        current = float(np.sum(np.abs(resid) ** 2) / total)
        if last - current <= 1e-12 * max(last, 1e-30):
            break
        last = current
    trace.refined = float(np.sum(np.abs(resid) ** 2) / total)
    log.debug(f"{len(params)} paths, residual {trace.refined:.3e}")
    return _to_pathset(params, gains, cfg.l_max, trace), trace


def estimate_paths(csi: Csi, cfg: EstimatorConfig = EstimatorConfig()) -> PathSet:
    return estimate_with_trace(csi, cfg)[0]


def residual_power(csi: Csi, ps: PathSet) -> float:
    """Fraction of observed power left unexplained by ``ps``."""
    observed = csi.observed()
    total = float(np.sum(np.abs(observed) ** 2))
    if total == 0:
        raise DataError("residual_power of a zero-power CSI is undefined")
    if len(ps) == 0:
        return 1.0
    model = synthesize_values(ps.as_array(), csi.grid)[:, csi.observed_mask]
    return float(np.sum(np.abs(observed - model) ** 2) / total)
