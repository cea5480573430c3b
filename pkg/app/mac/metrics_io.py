"""Simulation outputs: windowed CSV, JSON summary and the newline-delimited event log."""

import csv
import json
from pathlib import Path
from typing import Iterable, List, Union

from pydantic import ValidationError

from app.errors import DataError
from app.schemas import METRICS_SCHEMA, MacEvent, SimMetrics

CSV_COLUMNS = ["window_start_ms", "mode", "throughput_bps", "sounding_fraction"]


def write_metrics_csv(metrics: SimMetrics, path: Union[str, Path]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(CSV_COLUMNS)
        for w in metrics.windows:
            writer.writerow([repr(float(w.window_start_ms)), metrics.mode.value,
                             repr(float(w.throughput_bps)), repr(float(w.sounding_fraction))])


def metrics_json(metrics: SimMetrics) -> str:
    return metrics.model_dump_json(by_alias=True, indent=2) + "\n"


def write_metrics_json(metrics: SimMetrics, path: Union[str, Path]) -> None:
    Path(path).write_text(metrics_json(metrics), encoding="utf-8")


def read_metrics(path: Union[str, Path]) -> SimMetrics:
    """Load a JSON summary, rejecting other schemas."""
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise DataError(f"cannot read metrics {path}: {e}") from e
    if not isinstance(raw, dict) or raw.get("schema") != METRICS_SCHEMA:
        found = raw.get("schema") if isinstance(raw, dict) else type(raw).__name__
        raise DataError(f"{path}: expected schema {METRICS_SCHEMA}, found {found}")
    try:
        return SimMetrics.model_validate(raw)
    except ValidationError as e:
        raise DataError(f"{path}: {e}") from e


def write_event_log(events: Iterable[MacEvent], path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for ev in events:
            f.write(ev.model_dump_json() + "\n")


def read_event_log(path: Union[str, Path]) -> List[MacEvent]:
    events = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                events.append(MacEvent.model_validate_json(line))
            except ValidationError as e:
                raise DataError(f"{path}:{lineno}: bad event: {e}") from e
    return events
