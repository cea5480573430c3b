"""
Tests for the clcp command line: synth, train, simulate, report, bench,
mcs-table and replay, including exit codes.
"""

import csv
import hashlib
import json

import pytest
from click.testing import CliRunner

from app.cli import cli
from app.config import dump_config
from app.schemas import EnvironmentConfig, SimConfig, UserSpec

SIM_TXT = "schema_version = 1\nduration_ms = 40\nwindow_ms = 20\n"


def invoke(*args):
    return CliRunner().invoke(cli, [str(a) for a in args])


def sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def read_csv(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


@pytest.fixture
def sim_config(tmp_path):
    path = tmp_path / "sim.txt"
    path.write_text(SIM_TXT)
    return path


# ============ SYNTH ============

def test_synth_writes_trace_and_manifest(tmp_path):
    out = tmp_path / "trace"
    res = invoke("synth", "--scenario", "two_link", "--samples", 20, "--out", out)
    assert res.exit_code == 0, res.output
    assert "2 links x 20 samples, S=256" in res.output
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "synth"
    assert set(manifest["artifact_hashes"]) == {"trace.bin", "environment.json", "environment.txt"}
    assert manifest["artifact_hashes"]["trace.bin"] == sha(out / "trace.bin")


def test_synth_is_reproducible_and_replayable(tmp_path):
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    assert invoke("synth", "--scenario", "two_link", "--samples", 10, "--seed", 4, "--out", a).exit_code == 0
    assert invoke("synth", "--scenario", "two_link", "--samples", 10, "--seed", 4, "--out", b).exit_code == 0
    assert sha(a / "trace.bin") == sha(b / "trace.bin")
    res = invoke("replay", a / "manifest.json", "--out", c)
    assert res.exit_code == 0, res.output
    assert sha(c / "trace.bin") == sha(a / "trace.bin")


def test_synth_at_160mhz(tmp_path):
    res = invoke("synth", "--scenario", "two_link", "--bandwidth", 160, "--samples", 2, "--out", tmp_path)
    assert res.exit_code == 0, res.output
    assert "S=2048" in res.output


def test_synth_rejects_config_and_scenario(tmp_path):
    cfg = tmp_path / "env.txt"
    cfg.write_text(dump_config(EnvironmentConfig(user_count=2)))
    res = invoke("synth", "--config", cfg, "--scenario", "two_link", "--out", tmp_path / "o")
    assert res.exit_code == 2


def test_bad_config_is_a_data_error(tmp_path):
    cfg = tmp_path / "env.txt"
    cfg.write_text("schema_version = 1\nno_such_key = 3\n")
    assert invoke("synth", "--config", cfg, "--out", tmp_path / "o").exit_code == 3


# ============ SIMULATE / REPORT ============

def test_simulate_mode_matrix(tmp_path, sim_config):
    out = tmp_path / "sim"
    res = invoke("simulate", "--config", sim_config, "--scenario", "two_link",
                 "--mode", "baseline", "--mode", "oracle", "--events", "--out", out)
    assert res.exit_code == 0, res.output
    for mode in ("baseline", "oracle"):
        assert (out / f"metrics_{mode}_seed0.csv").exists()
        assert (out / f"events_{mode}_seed0.ndjson").exists()
        summary = json.loads((out / f"metrics_{mode}_seed0.json").read_text())
        assert summary["schema"] == "clcp-metrics/1"
        assert summary["users"] == 2
    assert json.loads((out / "manifest.json").read_text())["params"]["modes"] == ["baseline", "oracle"]


def test_simulate_honors_user_count(tmp_path, sim_config):
    res = invoke("simulate", "--config", sim_config, "--users", 3, "--mode", "oracle", "--out", tmp_path)
    assert res.exit_code == 0, res.output
    assert json.loads((tmp_path / "metrics_oracle_seed0.json").read_text())["users"] == 3


def test_simulate_rejects_unknown_mode(tmp_path):
    res = invoke("simulate", "--mode", "magic", "--out", tmp_path)
    assert res.exit_code == 2


def test_clcp_needs_models(tmp_path, sim_config):
    res = invoke("simulate", "--config", sim_config, "--scenario", "two_link", "--mode", "clcp",
                 "--out", tmp_path)
    assert res.exit_code == 3


def test_report_ratios(tmp_path, sim_config):
    sim = tmp_path / "sim"
    assert invoke("simulate", "--config", sim_config, "--scenario", "two_link",
                  "--mode", "baseline", "--mode", "oracle", "--out", sim).exit_code == 0
    res = invoke("report", sim / "metrics_baseline_seed0.json", sim / "metrics_oracle_seed0.json",
                 "--out", tmp_path / "report")
    assert res.exit_code == 0, res.output
    rows = {r["mode"]: r for r in read_csv(tmp_path / "report" / "summary.csv")}
    assert float(rows["baseline"]["ratio_vs_baseline"]) == pytest.approx(1.0)
    expected = float(rows["oracle"]["throughput_bps"]) / float(rows["baseline"]["throughput_bps"])
    assert float(rows["oracle"]["ratio_vs_baseline"]) == pytest.approx(expected)
    for name in ("evm.csv", "windows.csv", "twt.csv", "per.csv", "rates.csv", "manifest.json"):
        assert (tmp_path / "report" / name).exists()


def test_report_of_one_file_is_its_own_reference(tmp_path, sim_config):
    sim = tmp_path / "sim"
    assert invoke("simulate", "--config", sim_config, "--scenario", "two_link",
                  "--mode", "oracle", "--out", sim).exit_code == 0
    assert invoke("report", sim / "metrics_oracle_seed0.json", "--out", tmp_path / "r").exit_code == 0
    rows = read_csv(tmp_path / "r" / "summary.csv")
    assert float(rows[0]["ratio_vs_oracle"]) == pytest.approx(1.0)


def test_report_rejects_other_schemas(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"schema": "other/2"}))
    assert invoke("report", bad, "--out", tmp_path / "r").exit_code == 3


# ============ BENCH / TABLES ============

def test_bench_overhead_at_scale(tmp_path):
    res = invoke("bench", "overhead", "--users", 400, "--bandwidth", 160, "--out", tmp_path)
    assert res.exit_code == 0, res.output
    rows = {r["mode"]: r for r in read_csv(tmp_path / "overhead.csv")}
    assert float(rows["baseline"]["fraction"]) > 0.4
    assert float(rows["clcp"]["fraction"]) == 0.0
    assert float(rows["oracle"]["fraction"]) == 0.0


def test_bench_detection(tmp_path):
    res = invoke("bench", "detection", "--snr", 0, "--snr", 20, "--symbols", 500, "--out", tmp_path)
    assert res.exit_code == 0, res.output
    rows = read_csv(tmp_path / "detection_ber.csv")
    assert {r["method"] for r in rows} == {"ZF-SIC", "MMSE-SIC", "ML"}
    assert len(rows) == 6


def test_mcs_table(tmp_path):
    res = invoke("mcs-table", "--out", tmp_path)
    assert res.exit_code == 0, res.output
    assert len(res.output.strip().splitlines()) == 12
    assert len(read_csv(tmp_path / "mcs_table.csv")) == 12


def test_replay_rejects_unknown_command(tmp_path):
    manifest = tmp_path / "manifest.json"
    manifest.write_text(json.dumps({"command": "nope", "output_dir": "x", "version": "0"}))
    assert invoke("replay", manifest, "--out", tmp_path / "o").exit_code == 3


# ============ TRAIN -> SIMULATE ============

SMALL_MODEL_TXT = """schema_version = 1
model.latent_dim = 4
model.lstm_hidden = 8
model.conv_channels = [4, 4]
model.fc_hidden = 8
model.max_paths = 3
estimator.l_max = 3
"""

TRAIN_TXT = SMALL_MODEL_TXT + """train.learning_rate = 0.01
train.batch_size = 4
train.epochs_full = 1
train.epochs_partial = 0
"""

TWO_USERS = EnvironmentConfig(seed=5, ap_antennas=2, max_paths=3, n_reflectors=1, static_paths_per_link=1,
                              samples=8, users=[UserSpec(id=0, position=(3.0, 4.0, 1.0)),
                                                UserSpec(id=1, position=(4.0, 4.5, 1.0))])


@pytest.fixture
def two_user_trace(tmp_path):
    env_txt = tmp_path / "env.txt"
    env_txt.write_text(dump_config(TWO_USERS))
    assert invoke("synth", "--config", env_txt, "--out", tmp_path / "trace").exit_code == 0
    return tmp_path / "trace" / "trace.bin"


def test_train_manifest_echoes_default_optimizer(tmp_path, two_user_trace):
    cfg = tmp_path / "small.txt"
    cfg.write_text(SMALL_MODEL_TXT + "train.epochs_full = 1\ntrain.epochs_partial = 0\n")
    res = invoke("train", two_user_trace, "--config", cfg, "--out", tmp_path / "models")
    assert res.exit_code == 0, res.output
    params = json.loads((tmp_path / "models" / "manifest.json").read_text())["params"]
    assert params["learning_rate"] == 5e-6
    assert params["batch_size"] == 16
    assert (params["epochs_full"], params["epochs_partial"], params["seed"]) == (1, 0, 0)


def test_loss_log_has_one_row_per_epoch_and_stage(tmp_path, two_user_trace):
    cfg = tmp_path / "small.txt"
    cfg.write_text(SMALL_MODEL_TXT + "train.batch_size = 4\n")
    res = invoke("train", two_user_trace, "--config", cfg, "--epochs-full", 2, "--epochs-partial", 2,
                 "--out", tmp_path / "models")
    assert res.exit_code == 0, res.output
    rows = read_csv(tmp_path / "models" / "loss_group0.csv")
    assert [(r["epoch"], r["stage"]) for r in rows] == [("0", "full"), ("1", "full"),
                                                        ("2", "partial"), ("3", "partial")]
    assert len(read_csv(tmp_path / "models" / "loss_batches_group0.csv")) == 4 * 2


@pytest.mark.slow
def test_train_then_simulate_clcp(tmp_path, two_user_trace):
    env = TWO_USERS
    train_txt = tmp_path / "train.txt"
    train_txt.write_text(TRAIN_TXT)

    res = invoke("train", two_user_trace, "--config", train_txt,
                 "--out", tmp_path / "models")
    assert res.exit_code == 0, res.output
    models = tmp_path / "models"
    assert (models / "group0.clcp").exists()
    assert len(read_csv(models / "loss_group0.csv")) == 1
    assert "train.learning_rate = 0.01" in (models / "training.txt").read_text()

    sim_txt = tmp_path / "sim.txt"
    sim_txt.write_text(dump_config(SimConfig(duration_ms=40, window_ms=20, environment=env)))
    res = invoke("simulate", "--config", sim_txt, "--mode", "clcp", "--models", models,
                 "--out", tmp_path / "sim")
    assert res.exit_code == 0, res.output
    summary = json.loads((tmp_path / "sim" / "metrics_clcp_seed0.json").read_text())
    assert summary["mode"] == "clcp"
    assert summary["evm_records"]
