"""
Scenario presets.
Each preset is a plain dict of EnvironmentConfig fields; build_scenario layers
caller overrides on top and validates the result.
"""

from typing import Any, Dict, List

from app.config import config_from_dict
from app.schemas import SCHEMA_VERSION, EnvironmentConfig

# --- Retail floor: line of sight, clustered shoppers, people walking through ---
CASHIERLESS_STORE: Dict[str, Any] = {
    "bandwidth_mhz": 80,
    "room": {"lower": [0.0, 0.0, 0.0], "upper": [20.0, 15.0, 3.0]},
    "ap_position": [10.0, 0.5, 2.8],
    "user_count": 64,
    "user_layout": "clusters",
    "cluster_size": 4,
    "cluster_radius_m": 1.5,
    "users_nlos": False,
    "n_reflectors": 6,
    "speed_range": [0.8, 1.5],
}

# --- Warehouse aisles: shelving blocks the direct path ---
SMART_WAREHOUSE: Dict[str, Any] = {
    "bandwidth_mhz": 20,
    "room": {"lower": [0.0, 0.0, 0.0], "upper": [30.0, 20.0, 6.0]},
    "ap_position": [15.0, 0.5, 5.5],
    "user_count": 32,
    "user_layout": "random",
    "users_nlos": True,
    "nlos_attenuation_db": 10.0,
    "n_reflectors": 4,
    "speed_range": [1.0, 2.5],
}

# --- Training scenarios ---
TWO_LINK: Dict[str, Any] = {
    "bandwidth_mhz": 20,
    "users": [
        {"id": 0, "position": [3.0, 4.0, 1.0]},
        {"id": 1, "position": [4.2, 4.5, 1.0]},
    ],
    "n_reflectors": 2,
}

FOUR_LINK_SHARED_REFLECTOR: Dict[str, Any] = {
    "bandwidth_mhz": 20,
    "users": [
        {"id": 0, "position": [3.0, 4.0, 1.0]},
        {"id": 1, "position": [4.0, 4.6, 1.0]},
        {"id": 2, "position": [5.0, 4.2, 1.0]},
        {"id": 3, "position": [6.0, 4.8, 1.0]},
    ],
    "reflectors": [
        {"position": [5.0, 6.5, 1.5], "velocity": [1.2, 0.4, 0.0], "reflectivity": 0.9},
    ],
}

SCENARIOS: Dict[str, Dict[str, Any]] = {
    "cashierless_store": CASHIERLESS_STORE,
    "smart_warehouse": SMART_WAREHOUSE,
    "two_link": TWO_LINK,
    "four_link_shared_reflector": FOUR_LINK_SHARED_REFLECTOR,
}


def scenario_names() -> List[str]:
    return sorted(SCENARIOS)


def build_scenario(name: str, **overrides: Any) -> EnvironmentConfig:
    """Preset ``name`` with top-level field ``overrides``; KeyError for an unknown preset."""
    if name not in SCENARIOS:
        raise KeyError(f"Unknown scenario: {name} (known: {', '.join(scenario_names())})")
    data = {"schema_version": SCHEMA_VERSION, **SCENARIOS[name]}
    data.update(overrides)
    return config_from_dict(data, EnvironmentConfig)
