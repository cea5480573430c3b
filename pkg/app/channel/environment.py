"""
Geometric environment shared by every link of one access point.

Each link owns static paths (the direct path plus fixed scatterers); moving
reflectors add one path to every link, so a single walking person perturbs
all nearby links together.
"""

import math
from typing import Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel

from app.channel.csi import Path, PathSet
from app.schemas import EnvironmentConfig, RoomSpec, UserSpec, Vec3

ARRAY_AXIS = np.array([1.0, 0.0, 0.0])
REFLECTION_PHASE = math.pi


class StaticPath(BaseModel):
    theta: float
    d: float
    a: float
    phi: float


class MovingReflector(BaseModel):
    position: Vec3
    velocity: Vec3
    reflectivity: float
    phase: float = REFLECTION_PHASE


class Environment(BaseModel):
    ap_position: Vec3
    ap_antennas: int
    users: List[UserSpec]
    static_paths: Dict[int, List[StaticPath]]
    moving_reflectors: List[MovingReflector]
    room: RoomSpec
    max_paths: int
    rng_seed: int
    time_s: float = 0.0

    def link_ids(self) -> List[int]:
        return [u.id for u in self.users]

    def user(self, link_id: int) -> UserSpec:
        for u in self.users:
            if u.id == link_id:
                return u
        raise KeyError(f"Unknown link id: {link_id}")


def arrival_angle(ap: np.ndarray, source: np.ndarray) -> float:
    """Angle between the AP array axis and the direction toward ``source``."""
    v = np.asarray(source, dtype=float) - np.asarray(ap, dtype=float)
    n = np.linalg.norm(v)
    if n == 0:
        return math.pi / 2
    return float(np.arccos(np.clip(v @ ARRAY_AXIS / n, -1.0, 1.0)))


def _free_space(reflectivity: float, length: float) -> float:
    return min(1.0, reflectivity / max(length, 1.0))


def _generate_users(cfg: EnvironmentConfig, rng: np.random.Generator) -> List[UserSpec]:
    lo = np.array(cfg.room.lower)
    hi = np.array(cfg.room.upper)
    margin = np.minimum(0.5, (hi - lo) / 4)
    users: List[UserSpec] = []
    if cfg.user_layout == "random":
        for uid in range(cfg.user_count):
            pos = rng.uniform(lo + margin, hi - margin)
            users.append(UserSpec(id=uid, position=tuple(pos), nlos=cfg.users_nlos))
        return users
    n_clusters = math.ceil(cfg.user_count / cfg.cluster_size)
    for c in range(n_clusters):
        centre = rng.uniform(lo + margin + cfg.cluster_radius_m, hi - margin - cfg.cluster_radius_m)
        for _ in range(cfg.cluster_size):
            if len(users) == cfg.user_count:
                break
            offset = rng.uniform(-cfg.cluster_radius_m, cfg.cluster_radius_m, size=3)
            offset[2] = 0.0
            pos = np.clip(centre + offset, lo + margin, hi - margin)
            users.append(UserSpec(id=len(users), position=tuple(pos), nlos=cfg.users_nlos))
    return users


def build_environment(config: EnvironmentConfig) -> Environment:
    rng = np.random.default_rng(config.seed)
    users = list(config.users) or _generate_users(config, rng)
    if not users:
        raise ValueError("environment needs at least one user")
    if len({u.id for u in users}) != len(users):
        raise ValueError("user ids must be unique")

    ap = np.array(config.ap_position, dtype=float)
    lo = np.array(config.room.lower)
    hi = np.array(config.room.upper)
    nlos_gain = 10 ** (-config.nlos_attenuation_db / 20)

    static: Dict[int, List[StaticPath]] = {}
    for u in users:
        pos = np.array(u.position, dtype=float)
        dist = float(np.linalg.norm(pos - ap))
        if dist <= 0:
            raise ValueError(f"user {u.id} sits on the AP: distance must be positive")
        a = _free_space(1.0, dist) * (nlos_gain if u.nlos else 1.0)
        paths = [StaticPath(theta=arrival_angle(ap, pos), d=dist, a=a, phi=0.0)]
        for _ in range(config.static_paths_per_link):
            point = rng.uniform(lo, hi)
            length = float(np.linalg.norm(point - ap) + np.linalg.norm(pos - point))
            paths.append(StaticPath(theta=arrival_angle(ap, point), d=length,
                                    a=_free_space(config.static_reflectivity, length),
                                    phi=float(rng.uniform(-math.pi, math.pi))))
        static[u.id] = paths

    if config.reflectors:
        reflectors = [MovingReflector(position=r.position, velocity=r.velocity,
                                      reflectivity=r.reflectivity) for r in config.reflectors]
    else:
        reflectors = []
        for _ in range(config.n_reflectors):
            heading = rng.uniform(0, 2 * math.pi)
            speed = rng.uniform(*config.speed_range)
            reflectors.append(MovingReflector(
                position=tuple(rng.uniform(lo, hi)),
                velocity=(speed * math.cos(heading), speed * math.sin(heading), 0.0),
                reflectivity=float(rng.uniform(*config.reflectivity_range)),
            ))

    return Environment(
        ap_position=config.ap_position,
        ap_antennas=config.ap_antennas,
        users=users,
        static_paths=static,
        moving_reflectors=reflectors,
        room=config.room,
        max_paths=config.max_paths,
        rng_seed=config.seed,
    )


def _bounce(x: float, v: float, lo: float, hi: float):
    span = hi - lo
    t = (x - lo) / span
    n = math.floor(t)
    frac = t - n
    if n % 2 == 0:
        return lo + frac * span, v
    return hi - frac * span, -v


def advance(env: Environment, dt: float) -> Environment:
    """Move every reflector by ``dt`` seconds, reflecting elastically off the room walls."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    moved = []
    for r in env.moving_reflectors:
        pos, vel = [], []
        for k in range(3):
            x, v = _bounce(r.position[k] + r.velocity[k] * dt, r.velocity[k],
                           env.room.lower[k], env.room.upper[k])
            pos.append(x)
            vel.append(v)
        moved.append(r.model_copy(update={"position": tuple(pos), "velocity": tuple(vel)}))
    return env.model_copy(update={"moving_reflectors": moved, "time_s": env.time_s + dt})


def freeze(env: Environment) -> Environment:
    still = [r.model_copy(update={"velocity": (0.0, 0.0, 0.0)}) for r in env.moving_reflectors]
    return env.model_copy(update={"moving_reflectors": still})


def reflector_path(env: Environment, link_id: int, reflector: MovingReflector) -> Path:
    ap = np.array(env.ap_position, dtype=float)
    pos = np.array(env.user(link_id).position, dtype=float)
    r = np.array(reflector.position, dtype=float)
    length = float(np.linalg.norm(r - ap) + np.linalg.norm(pos - r))
    return Path(arrival_angle(ap, r), length, _free_space(reflector.reflectivity, length),
                reflector.phase)


def paths_for_link(env: Environment, link_id: int) -> PathSet:
    if link_id not in env.static_paths:
        raise KeyError(f"Unknown link id: {link_id}")
    paths = [Path(p.theta, p.d, p.a, p.phi) for p in env.static_paths[link_id]]
    paths.extend(reflector_path(env, link_id, r) for r in env.moving_reflectors)
    return PathSet.strongest(paths, env.max_paths)


def link_distances(env: Environment, link_ids: Optional[Sequence[int]] = None) -> np.ndarray:
    ids = list(link_ids) if link_ids is not None else env.link_ids()
    pos = np.array([env.user(i).position for i in ids], dtype=float)
    return np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=-1)
