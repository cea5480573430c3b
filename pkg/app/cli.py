"""
Command-line entry point::

    python -m app.cli synth --scenario four_link_shared_reflector --out runs/trace
    python -m app.cli train runs/trace/trace.bin --out runs/models
    python -m app.cli simulate --mode baseline --mode clcp --models runs/models --out runs/sim
    python -m app.cli report runs/sim/metrics_*.json --out runs/report

Every command that writes files also writes ``manifest.json``; ``replay``
re-runs a manifest into a fresh directory. Exit codes: 0 success, 2 usage,
3 data error, 4 numerical failure.
"""

import csv
import hashlib
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import click
import numpy as np
from pydantic import ValidationError

from app import __version__
from app.channel.csi import FrequencyGrid, PathSet
from app.channel.environment import build_environment, freeze
from app.channel.trace import TraceHeader, read_trace, simulate_trace, write_trace
from app.channel.variability import channel_variability
from app.config import config_from_dict, dump_config, load_config
from app.errors import ClcpError, DataError, NumericalError
from app.evaluation import (capacity_fidelity, detection_ber_sweep, evm_by_observed_views, evm_rows,
                            overhead_fraction, per_distribution, rate_distribution, summary_rows,
                            twt_rows, window_rows)
from app.mac.frames import sounding_cost
from app.mac.metrics_io import read_metrics, write_event_log, write_metrics_csv, write_metrics_json
from app.mac.simulator import simulate as run_simulation
from app.model.dataset import ClcpDataset, dataset_from_trace
from app.model.export import export_latents, write_batch_loss_log, write_latents_csv, write_loss_log
from app.model.grouping import form_groups
from app.model.serialization import load_model, load_model_dir, model_path, save_model
from app.model.trainer import train_multistage
from app.phy.mcs import load_mcs_table
from app.scenarios import build_scenario, scenario_names
from app.schemas import (SUPPORTED_BANDWIDTHS, DetectionMethod, EnvironmentConfig, Mode, RunManifest,
                         SimConfig, TrainingRunConfig)
from app.sra.ru_tree import build_ru_tree
from app.utils.log import get_logger, set_level

log = get_logger("CLI")

MANIFEST = "manifest.json"
TRACE = "trace.bin"
BANDWIDTHS = [str(b) for b in SUPPORTED_BANDWIDTHS]
MODES = [m.value for m in Mode]


# ---------------------------
# ARTIFACT PLUMBING
# ---------------------------

def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _jsonable(value: Any) -> Any:
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, Path):
        return str(value)
    return value


def _outdir(out: str) -> Path:
    path = Path(out)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise DataError(f"cannot create output directory {out}: {e}") from e
    return path


def write_manifest(out: Path, command: str, artifacts: Iterable[Path],
                   config_path: Optional[str] = None, seeds: Sequence[int] = (),
                   resolved: Optional[Dict[str, Any]] = None) -> RunManifest:
    """Record the command's parameters (overlaid with ``resolved``) and the hash of each artifact."""
    params = {k: _jsonable(v) for k, v in click.get_current_context().params.items()}
    params.update(resolved or {})
    manifest = RunManifest(
        command=command,
        config_path=config_path,
        seeds=list(seeds),
        output_dir=str(out),
        params=params,
        artifact_hashes={p.name: sha256_file(p) for p in sorted(artifacts)},
        version=__version__,
    )
    (out / MANIFEST).write_text(manifest.model_dump_json(indent=2) + "\n", encoding="utf-8")
    return manifest


def read_manifest(path: str) -> RunManifest:
    try:
        return RunManifest.model_validate_json(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValidationError) as e:
        raise DataError(f"cannot read manifest {path}: {e}") from e


def write_rows(path: Path, rows: Sequence[Dict[str, Any]], columns: Optional[List[str]] = None) -> Path:
    columns = columns or (list(rows[0]) if rows else [])
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=columns)
        writer.writeheader()
        writer.writerows(rows)
    return path


# ---------------------------
# CONFIG RESOLUTION
# ---------------------------

def _overridden(base, model, **overrides):
    data = base.model_dump(mode="json")
    data.update({k: v for k, v in overrides.items() if v is not None})
    return config_from_dict(data, model)


def resolve_environment(config_path: Optional[str], scenario: Optional[str],
                        **overrides) -> EnvironmentConfig:
    if config_path and scenario:
        raise click.UsageError("--config and --scenario are mutually exclusive")
    if config_path:
        base = load_config(config_path, EnvironmentConfig)
    elif scenario:
        base = build_scenario(scenario)
    else:
        base = EnvironmentConfig()
    if overrides.get("user_count") is not None and base.users:
        raise DataError("--users cannot override an explicit user list")
    return _overridden(base, EnvironmentConfig, **overrides)


def grid_for(env_cfg: EnvironmentConfig) -> FrequencyGrid:
    return FrequencyGrid.for_bandwidth(env_cfg.bandwidth_mhz, env_cfg.ap_antennas, env_cfg.center_freq_hz)


def _group_dataset(trace_path: str, env_path: Optional[str], run_cfg: TrainingRunConfig):
    """Full-band dataset of a trace, with the environment's groups."""
    env_path = env_path or str(Path(trace_path).with_name("environment.txt"))
    env_cfg = load_config(env_path, EnvironmentConfig)
    env = build_environment(env_cfg)
    trace = read_trace(trace_path)
    links = env.link_ids()
    if trace.header.links != len(links):
        raise DataError(f"trace has {trace.header.links} links, environment {env_path} has {len(links)}")
    groups = form_groups({u.id: u.position for u in env.users}, run_cfg.train.group_radius_m)
    dataset = dataset_from_trace(trace, grid_for(env_cfg), links, run_cfg.estimator, run_cfg.model.max_paths)
    return dataset, groups


def _selected(groups: List[List[int]], wanted: Sequence[int]) -> List[int]:
    ids = list(wanted) or list(range(len(groups)))
    unknown = [g for g in ids if not 0 <= g < len(groups)]
    if unknown:
        raise DataError(f"unknown group ids {unknown}; the environment has {len(groups)} groups")
    return ids


# ---------------------------
# ROOT GROUP
# ---------------------------

class ClcpGroup(click.Group):
    """Maps library failures onto the documented exit codes."""

    def invoke(self, ctx: click.Context):
        try:
            return super().invoke(ctx)
        except ClcpError as e:
            self._fail(ctx, e, e.exit_code)
        except (ValueError, LookupError) as e:
            self._fail(ctx, e, DataError.exit_code)
        except ArithmeticError as e:
            self._fail(ctx, e, NumericalError.exit_code)

    @staticmethod
    def _fail(ctx: click.Context, error: Exception, code: int) -> None:
        log.error(f"{type(error).__name__}: {error}")
        click.echo(f"Error: {error}", err=True)
        ctx.exit(code)


@click.group(cls=ClcpGroup)
@click.option("-v", "--verbose", count=True, help="-v for info, -vv for debug (overrides CLCP_LOG).")
@click.version_option(__version__, prog_name="clcp")
def cli(verbose: int):
    """Cross-link channel prediction for 802.11ax uplink OFDMA."""
    if verbose:
        set_level("debug" if verbose > 1 else "info")


# ---------------------------
# SYNTH
# ---------------------------

@cli.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              help="EnvironmentConfig file.")
@click.option("--scenario", type=click.Choice(scenario_names()), help="Preset environment.")
@click.option("--seed", type=int)
@click.option("--bandwidth", type=click.Choice(BANDWIDTHS))
@click.option("--users", type=click.IntRange(min=1))
@click.option("--samples", type=click.IntRange(min=1))
@click.option("--out", required=True, type=click.Path(file_okay=False))
def synth(config_path, scenario, seed, bandwidth, users, samples, out):
    """Record a synthetic CSI trace and the environment it came from."""
    out_dir = _outdir(out)
    env_cfg = resolve_environment(config_path, scenario, seed=seed, user_count=users, samples=samples,
                                  bandwidth_mhz=int(bandwidth) if bandwidth else None)
    env = build_environment(env_cfg)
    grid = grid_for(env_cfg)
    header = TraceHeader(grid.antennas, grid.subcarriers, len(env.users), env_cfg.samples,
                         env_cfg.sample_period_us)
    impairments = env_cfg.impairments if env_cfg.impair else None
    rng = np.random.default_rng([env_cfg.seed, 2])
    trace_path = out_dir / TRACE
    write_trace(trace_path, header, simulate_trace(env, grid, env_cfg.samples, env_cfg.sample_period_us,
                                                   impairments, rng))
    env_json = out_dir / "environment.json"
    env_json.write_text(env.model_dump_json(indent=2) + "\n", encoding="utf-8")
    env_txt = out_dir / "environment.txt"
    env_txt.write_text(dump_config(env_cfg), encoding="utf-8")
    write_manifest(out_dir, "synth", [trace_path, env_json, env_txt], config_path, [env_cfg.seed])
    click.echo(f"{trace_path}: {header.links} links x {header.samples} samples, S={header.subcarriers}")


# ---------------------------
# TRAIN
# ---------------------------

@cli.command()
@click.argument("trace", type=click.Path(exists=True, dir_okay=False))
@click.option("--environment", "env_path", type=click.Path(exists=True, dir_okay=False),
              help="Resolved environment config (default: environment.txt beside the trace).")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              help="TrainingRunConfig file.")
@click.option("--seed", type=int)
@click.option("--epochs-full", type=click.IntRange(min=0))
@click.option("--epochs-partial", type=click.IntRange(min=0))
@click.option("--group", "groups", type=int, multiple=True, help="Train only these group ids.")
@click.option("--resume", is_flag=True, help="Continue from checkpoints in --out.")
@click.option("--export-latents", "export", is_flag=True, help="Also write per-link latent means.")
@click.option("--out", required=True, type=click.Path(file_okay=False))
def train(trace, env_path, config_path, seed, epochs_full, epochs_partial, groups, resume, export, out):
    """Train one cross-link model per user group of a trace."""
    out_dir = _outdir(out)
    base = load_config(config_path, TrainingRunConfig) if config_path else TrainingRunConfig()
    train_cfg = _overridden(base.train, type(base.train), seed=seed, epochs_full=epochs_full,
                            epochs_partial=epochs_partial)
    run_cfg = base.model_copy(update={"train": train_cfg})
    dataset, all_groups = _group_dataset(trace, env_path, run_cfg)

    artifacts = []
    trained = _selected(all_groups, groups)
    for g in trained:
        ds = dataset.select_links(all_groups[g])
        model, losses = train_multistage(ds, run_cfg, checkpoint_path=out_dir / f"group{g}.ckpt",
                                         resume=resume)
        artifacts.append(model_path(out_dir, g))
        save_model(model, artifacts[-1])
        artifacts.append(out_dir / f"loss_group{g}.csv")
        write_loss_log(losses, artifacts[-1])
        artifacts.append(out_dir / f"loss_batches_group{g}.csv")
        write_batch_loss_log(losses, artifacts[-1])
        if export:
            artifacts.append(out_dir / f"latents_group{g}.csv")
            write_latents_csv(export_latents(ds, model), artifacts[-1])
        log.info(f"group {g} {all_groups[g]}: final loss {losses[-1].loss:.4e}" if losses
                 else f"group {g}: no epochs run")
    cfg_txt = out_dir / "training.txt"
    cfg_txt.write_text(dump_config(run_cfg), encoding="utf-8")
    artifacts.append(cfg_txt)
    tc = run_cfg.train
    write_manifest(out_dir, "train", artifacts, config_path, [tc.seed],
                   resolved={"learning_rate": tc.learning_rate, "batch_size": tc.batch_size,
                             "epochs_full": tc.epochs_full, "epochs_partial": tc.epochs_partial,
                             "seed": tc.seed})
    click.echo(f"trained {len(trained)} group model(s) into {out_dir}")


# ---------------------------
# SIMULATE
# ---------------------------

@cli.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              help="SimConfig file.")
@click.option("--mode", "modes", type=click.Choice(MODES), multiple=True, help="Repeat for a mode matrix.")
@click.option("--seed", "seeds", type=int, multiple=True, help="Repeat for several seeds.")
@click.option("--bandwidth", type=click.Choice(BANDWIDTHS))
@click.option("--users", type=click.IntRange(min=1))
@click.option("--scenario", type=click.Choice(scenario_names()), help="Preset environment.")
@click.option("--duration-ms", type=click.FloatRange(min=0, min_open=True))
@click.option("--models", "model_dir", type=click.Path(exists=True, file_okay=False),
              help="Directory of group<N>.clcp models (clcp mode).")
@click.option("--oracle-predictor", is_flag=True, help="Ground-truth CSI in place of the learned predictor.")
@click.option("--events/--no-events", default=False, help="Also write the MAC event log.")
@click.option("--out", required=True, type=click.Path(file_okay=False))
def simulate(config_path, modes, seeds, bandwidth, users, scenario, duration_ms, model_dir,
             oracle_predictor, events, out):
    """Run the uplink MAC simulation for each mode and seed."""
    out_dir = _outdir(out)
    base = load_config(config_path, SimConfig) if config_path else SimConfig()
    env = build_scenario(scenario) if scenario else None
    base = _overridden(base, SimConfig, bandwidth_mhz=int(bandwidth) if bandwidth else None,
                       user_count=users, duration_ms=duration_ms,
                       oracle_predictor=True if oracle_predictor else None,
                       environment=env.model_dump(mode="json") if env else None)
    models = load_model_dir(model_dir) if model_dir else None

    artifacts = []
    seeds = list(seeds) or [base.seed]
    for mode in modes or [base.mode.value]:
        for seed in seeds:
            cfg = _overridden(base, SimConfig, mode=mode, seed=seed)
            result = run_simulation(cfg, models if cfg.mode == Mode.CLCP else None)
            stem = f"{mode}_seed{seed}"
            artifacts += [out_dir / f"metrics_{stem}.csv", out_dir / f"metrics_{stem}.json"]
            write_metrics_csv(result.metrics, artifacts[-2])
            write_metrics_json(result.metrics, artifacts[-1])
            if events:
                artifacts.append(out_dir / f"events_{stem}.ndjson")
                write_event_log(result.events, artifacts[-1])
            click.echo(f"{stem}: {result.metrics.throughput_bps / 1e6:.3f} Mb/s, "
                       f"sounding {result.metrics.sounding_fraction:.2%}")
    write_manifest(out_dir, "simulate", artifacts, config_path, seeds)


# ---------------------------
# REPORT
# ---------------------------

@cli.command()
@click.argument("metrics", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(file_okay=False))
def report(metrics, out):
    """Comparison tables across metrics JSON files."""
    out_dir = _outdir(out)
    runs = [read_metrics(p) for p in metrics]
    artifacts = [
        write_rows(out_dir / "summary.csv", summary_rows(runs)),
        write_rows(out_dir / "evm.csv", evm_rows(runs)),
        write_rows(out_dir / "windows.csv", window_rows(runs),
                   ["mode", "seed", "window_start_ms", "throughput_bps", "sounding_fraction"]),
        write_rows(out_dir / "twt.csv", twt_rows(runs),
                   ["mode", "seed", "user", "wakes", "sleep_fraction", "energy_j"]),
        write_rows(out_dir / "per.csv", [r for m in runs for r in per_distribution(m)],
                   ["mode", "seed", "time_us", "user", "mcs", "per", "mpdus", "delivered"]),
        write_rows(out_dir / "rates.csv", [r for m in runs for r in rate_distribution(m)],
                   ["mode", "seed", "time_us", "user", "mcs", "rate_bps"]),
    ]
    write_manifest(out_dir, "report", artifacts, seeds=sorted({m.seed for m in runs}))
    click.echo(f"report over {len(runs)} run(s) written to {out_dir}")


# ---------------------------
# BENCH
# ---------------------------

@cli.group()
def bench():
    """CSV producers for overhead, detection and prediction-quality studies."""


@bench.command("overhead")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--users", "user_counts", type=click.IntRange(min=1), multiple=True)
@click.option("--tones", type=click.IntRange(min=1), help="Tones per feedback report (default: FFT size).")
@click.option("--bandwidth", type=click.Choice(BANDWIDTHS))
@click.option("--pilot-users", type=click.IntRange(min=0), default=0, help="Unobserved groups (clcp).")
@click.option("--out", required=True, type=click.Path(file_okay=False))
def bench_overhead(config_path, user_counts, tones, bandwidth, pilot_users, out):
    out_dir = _outdir(out)
    base = load_config(config_path, SimConfig) if config_path else SimConfig()
    cfg = _overridden(base, SimConfig, bandwidth_mhz=int(bandwidth) if bandwidth else None)
    rows = []
    for users in user_counts or [16, 64, 144, 400]:
        for mode in Mode:
            cost = sounding_cost(mode, users, cfg, pilot_users=pilot_users, tones=tones)
            rows.append({"mode": mode.value, "users": users, "tones": tones or "",
                         "airtime_us": cost.airtime_us, "bytes": cost.bytes,
                         "fraction": overhead_fraction(mode, users, tones, cfg, pilot_users)})
    path = write_rows(out_dir / "overhead.csv", rows)
    write_manifest(out_dir, "bench overhead", [path], config_path)


@bench.command("detection")
@click.option("--snr", "snrs", type=float, multiple=True, help="SNR points in dB.")
@click.option("--symbols", type=click.IntRange(min=1), default=100_000)
@click.option("--seed", type=int, default=0)
@click.option("--modulation", type=click.Choice(["BPSK", "QPSK", "16-QAM"]), default="QPSK")
@click.option("--out", required=True, type=click.Path(file_okay=False))
def bench_detection(snrs, symbols, seed, modulation, out):
    out_dir = _outdir(out)
    rows = detection_ber_sweep(list(snrs) or [0.0, 5.0, 10.0, 15.0, 20.0], symbols, seed,
                               tuple(DetectionMethod), modulation=modulation)
    path = write_rows(out_dir / "detection_ber.csv", rows)
    write_manifest(out_dir, "bench detection", [path], seeds=[seed])


@bench.command("views")
@click.argument("trace", type=click.Path(exists=True, dir_okay=False))
@click.option("--models", "model_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--environment", "env_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--group", "groups", type=int, multiple=True)
@click.option("--holdout", type=click.FloatRange(0, 1, min_open=True, max_open=True), default=0.2)
@click.option("--out", required=True, type=click.Path(file_okay=False))
def bench_views(trace, model_dir, env_path, groups, holdout, out):
    """Held-out EVM by number of observed views."""
    out_dir = _outdir(out)
    dataset, all_groups = _group_dataset(trace, env_path, TrainingRunConfig())
    rows = []
    for g in _selected(all_groups, groups):
        model = load_model(model_path(model_dir, g))
        _, test = dataset.select_links(all_groups[g]).split(1 - holdout)
        for k, score in evm_by_observed_views(model, test).items():
            rows.append({"group": g, "views": k, "evm_db": score})
    path = write_rows(out_dir / "views.csv", rows, ["group", "views", "evm_db"])
    write_manifest(out_dir, "bench views", [path])


@bench.command("fidelity")
@click.argument("trace", type=click.Path(exists=True, dir_okay=False))
@click.option("--models", "model_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--environment", "env_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--snr-db", type=float, default=45.0)
@click.option("--bsr-bytes", type=click.IntRange(min=1), default=30_000)
@click.option("--out", required=True, type=click.Path(file_okay=False))
def bench_fidelity(trace, model_dir, env_path, snr_db, bsr_bytes, out):
    """Capacity of schedules built on predicted CSI relative to ground truth, one view per group."""
    out_dir = _outdir(out)
    dataset, all_groups = _group_dataset(trace, env_path, TrainingRunConfig())
    models = {g: load_model(model_path(model_dir, g)) for g in range(len(all_groups))}
    tree = build_ru_tree(dataset.grid.bandwidth_mhz)
    rows = []
    for t in range(len(dataset)):
        predicted, truth = _predict_instant(dataset, t, all_groups, models)
        score = capacity_fidelity(predicted, truth, {u: bsr_bytes for u in truth}, tree,
                                  10 ** (-snr_db / 10), n_t=dataset.grid.antennas)
        rows.append({"time_us": int(dataset.timestamps_us[t]), "fidelity": score})
    path = write_rows(out_dir / "fidelity.csv", rows, ["time_us", "fidelity"])
    write_manifest(out_dir, "bench fidelity", [path])


def _predict_instant(dataset: ClcpDataset, t: int, groups, models):
    predicted, truth = {}, {}
    for g, links in enumerate(groups):
        first = dataset.link_ids.index(links[0])
        observed = {links[0]: PathSet.from_array(dataset.rows[t, first], dataset.max_paths)}
        predicted.update(models[g].predict(observed, links))
        for u in links:
            truth[u] = dataset.csi_at(t, dataset.link_ids.index(u))
    return predicted, truth


@bench.command("variability")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--scenario", type=click.Choice(scenario_names()))
@click.option("--seconds", type=click.FloatRange(min=1.0), default=2.0)
@click.option("--out", required=True, type=click.Path(file_okay=False))
def bench_variability(config_path, scenario, seconds, out):
    """Per-subcarrier power variance of the moving scene against the frozen one."""
    out_dir = _outdir(out)
    env_cfg = resolve_environment(config_path, scenario)
    env = build_environment(env_cfg)
    grid = grid_for(env_cfg)
    rows = [{"scene": name, "variance_db": channel_variability(scene, grid, seconds,
                                                              rng=np.random.default_rng(env_cfg.seed))}
            for name, scene in (("moving", env), ("frozen", freeze(env)))]
    path = write_rows(out_dir / "variability.csv", rows)
    write_manifest(out_dir, "bench variability", [path], config_path, [env_cfg.seed])


# ---------------------------
# MCS TABLE / REPLAY
# ---------------------------

@cli.command("mcs-table")
@click.option("--table", "table_path", type=click.Path(exists=True, dir_okay=False),
              help="MCS data file (default: the packaged table).")
@click.option("--out", type=click.Path(file_okay=False), help="Also write mcs_table.csv here.")
def mcs_table(table_path, out):
    """Print the MCS table with calibrated thresholds resolved."""
    table = load_mcs_table(table_path) if table_path else load_mcs_table()
    rows = [{"index": e.index, "modulation": e.modulation.value, "coding_rate": str(e.coding_rate),
             "threshold_db": round(e.threshold_db, 3), "data_bits": e.data_bits} for e in table]
    for r in rows:
        click.echo(f"{r['index']:>2}  {r['modulation']:<9} {r['coding_rate']:<4} {r['threshold_db']:>7.3f} dB")
    if out:
        out_dir = _outdir(out)
        path = write_rows(out_dir / "mcs_table.csv", rows)
        write_manifest(out_dir, "mcs-table", [path], table_path)


def _command_for(name: str) -> click.Command:
    node: click.Command = cli
    for part in name.split():
        if not isinstance(node, click.Group) or part not in node.commands:
            raise DataError(f"manifest names unknown command {name!r}")
        node = node.commands[part]
    if isinstance(node, click.Group) or node is replay:
        raise DataError(f"manifest command {name!r} cannot be replayed")
    return node


@cli.command()
@click.argument("manifest", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.pass_context
def replay(ctx: click.Context, manifest, out):
    """Re-run the command recorded in MANIFEST into OUT."""
    recorded = read_manifest(manifest)
    command = _command_for(recorded.command)
    accepted = {p.name for p in command.params}
    params = {k: v for k, v in recorded.params.items() if k in accepted}
    params["out"] = out
    log.info(f"replaying {recorded.command} from {manifest}")
    ctx.invoke(command, **params)


def main():
    cli(prog_name="clcp")


if __name__ == "__main__":
    main()
