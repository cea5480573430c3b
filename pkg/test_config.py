"""
Tests for key-value configuration files, scenario presets and logging setup.
"""

import pytest

from app.config import dump_config, load_config, loads_config, parse_text
from app.errors import ConfigError, DataError
from app.scenarios import SCENARIOS, build_scenario, scenario_names
from app.schemas import EnvironmentConfig, SimConfig, TrainingRunConfig, UserSpec
from app.utils.log import get_logger, progress_enabled, set_level


# ============ PARSING ============

def test_parse_nests_dotted_keys():
    data = parse_text("""
# comment
schema_version = 1
mode = clcp
environment.user_count = 8
environment.room.upper = [10, 8, 3]
""")
    assert data == {"schema_version": 1, "mode": "clcp",
                    "environment": {"user_count": 8, "room": {"upper": [10, 8, 3]}}}


@pytest.mark.parametrize("text", [
    "schema_version = 1\nseed = 1\nseed = 2\n",
    "schema_version = 1\njust words\n",
    "schema_version = 1\n = 3\n",
    "schema_version = 1\nenvironment = 3\nenvironment.seed = 2\n",
])
def test_parse_errors(text):
    with pytest.raises(ConfigError):
        parse_text(text)


def test_missing_schema_version():
    with pytest.raises(ConfigError):
        loads_config("seed = 1\n", SimConfig)


def test_unknown_keys_are_rejected():
    with pytest.raises(ConfigError):
        loads_config("schema_version = 1\nsead = 1\n", SimConfig)
    with pytest.raises(ConfigError):
        loads_config("schema_version = 1\nenvironment.colour = 1\n", SimConfig)


def test_unsupported_schema_version():
    with pytest.raises(ConfigError):
        loads_config("schema_version = 2\n", SimConfig)


def test_cross_field_validation():
    with pytest.raises(ConfigError):
        loads_config("schema_version = 1\nduration_ms = 100\nwindow_ms = 500\n", SimConfig)
    with pytest.raises(ConfigError):
        loads_config("schema_version = 1\nbandwidth_mhz = 30\n", SimConfig)


def test_config_error_is_a_data_error():
    assert issubclass(ConfigError, DataError)
    assert issubclass(ConfigError, ValueError)
    assert ConfigError.exit_code == 3


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.txt", SimConfig)


# ============ DEFAULTS AND ROUND TRIPS ============

def test_sim_defaults():
    cfg = SimConfig()
    assert (cfg.coherence_ms, cfg.csi_bits, cfg.grouping) == (15.0, 8, 4)
    assert cfg.t_max_ms == 5.484


def test_training_defaults_are_dumped():
    text = dump_config(TrainingRunConfig())
    assert "train.learning_rate = 5e-06" in text
    assert "train.batch_size = 16" in text


@pytest.mark.parametrize("cfg", [
    SimConfig(mode="clcp", user_count=12, seed=3),
    EnvironmentConfig(users=[UserSpec(id=2, position=(1.0, 2.0, 1.0))], n_reflectors=0),
    TrainingRunConfig(),
])
def test_dump_then_load_is_identity(tmp_path, cfg):
    path = tmp_path / "cfg.txt"
    path.write_text(dump_config(cfg))
    again = load_config(path, type(cfg))
    assert again.model_dump() == cfg.model_dump()
    assert dump_config(again) == path.read_text()


# ============ SCENARIOS ============

@pytest.mark.parametrize("name", sorted(SCENARIOS))
def test_scenarios_validate(name):
    cfg = build_scenario(name)
    assert isinstance(cfg, EnvironmentConfig)
    assert cfg.users or cfg.user_count > 0


def test_scenario_overrides():
    cfg = build_scenario("smart_warehouse", user_count=8, seed=9)
    assert (cfg.user_count, cfg.seed) == (8, 9)
    assert cfg.users_nlos


def test_unknown_scenario():
    assert "two_link" in scenario_names()
    with pytest.raises(KeyError):
        build_scenario("moon_base")
    with pytest.raises(ConfigError):
        build_scenario("two_link", no_such_field=1)


# ============ LOGGING ============

def test_set_level_controls_progress_bars():
    get_logger("TEST").debug("quiet")
    set_level("info")
    assert progress_enabled()
    set_level("warning")
    assert not progress_enabled()
    with pytest.raises(ValueError):
        set_level("chatty")
