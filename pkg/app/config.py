"""
Key-value configuration files.

Format, one setting per line::

    # comment
    schema_version = 1
    bandwidth_mhz = 20
    environment.user_count = 8
    environment.users = [{"id": 0, "position": [3, 0, 1]}]

Dotted keys nest, values are JSON literals (bare words are read as strings).
Validation is delegated to the pydantic model, which forbids unknown keys.
"""

import json
from pathlib import Path
from typing import Any, Dict, Type, TypeVar, Union

from pydantic import BaseModel, ValidationError

from app.errors import ConfigError

M = TypeVar("M", bound=BaseModel)


def parse_text(text: str) -> Dict[str, Any]:
    data: Dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        try:
            parsed = json.loads(value)
        except json.JSONDecodeError:
            parsed = value
        node = data
        parts = key.split(".")
        for part in parts[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigError(f"line {lineno}: '{part}' is both a value and a section")
            node = child
        if parts[-1] in node:
            raise ConfigError(f"line {lineno}: duplicate key '{key}'")
        node[parts[-1]] = parsed
    return data


def load_config(path: Union[str, Path], model: Type[M]) -> M:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    return loads_config(text, model)


def loads_config(text: str, model: Type[M]) -> M:
    return config_from_dict(parse_text(text), model)


def config_from_dict(data: Dict[str, Any], model: Type[M]) -> M:
    if "schema_version" not in data and "schema_version" in model.model_fields:
        raise ConfigError("missing schema_version")
    try:
        return model.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"invalid {model.__name__}: {e}") from e


def _flatten(prefix: str, value: Any, out: Dict[str, Any]) -> None:
    if isinstance(value, dict) and value and all(isinstance(k, str) for k in value):
        for key in value:
            _flatten(f"{prefix}.{key}" if prefix else key, value[key], out)
    else:
        out[prefix] = value


def dump_config(config: BaseModel) -> str:
    """Render ``config`` as key-value text; loading it back yields an equal model."""
    flat: Dict[str, Any] = {}
    _flatten("", config.model_dump(mode="json"), flat)
    lines = [f"# {type(config).__name__}"]
    if "schema_version" in flat:
        lines.append(f"schema_version = {json.dumps(flat.pop('schema_version'))}")
    for key in sorted(flat):
        lines.append(f"{key} = {json.dumps(flat[key], sort_keys=True)}")
    return "\n".join(lines) + "\n"
