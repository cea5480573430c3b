"""
Model files.

Layout (little-endian)::

    magic "CLCPMDL1" | version u32 | header_len u32 | header JSON (UTF-8, sorted keys)
    weights: float32, row-major, in the order of the header's "tensors" table

The header carries N (links), Z (latent size), L (path slots), the model
config, the frequency grid and the tensor shape table. Batch-norm running
statistics are stored as tensors too.
"""

import json
import struct
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np

from app.channel.csi import FrequencyGrid
from app.errors import DataError
from app.model.network import ClcpModel
from app.schemas import ModelConfig

MAGIC = b"CLCPMDL1"
FORMAT_VERSION = 1
_PREFIX = struct.Struct("<8sII")


def _tensors(model: ClcpModel) -> List[Tuple[str, np.ndarray]]:
    return list(model.named_parameters()) + list(model.named_buffers())


def save_model(model: ClcpModel, path: Union[str, Path]) -> None:
    tensors = _tensors(model)
    for name, value in tensors:
        if not np.all(np.isfinite(value)):
            raise DataError(f"refusing to save non-finite tensor {name}")
    header = {
        "version": ClcpModel.VERSION,
        "N": model.n_links,
        "Z": model.latent_dim,
        "L": model.cfg.max_paths,
        "link_ids": model.link_ids,
        "config": model.cfg.model_dump(mode="json"),
        "grid": {
            "antennas": model.grid.antennas,
            "antenna_spacing": model.grid.antenna_spacing,
            "bandwidth_mhz": model.grid.bandwidth_mhz,
            "wavelengths": model.grid.wavelengths.tolist(),
        },
        "tensors": [[name, list(value.shape)] for name, value in tensors],
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    try:
        with open(path, "wb") as f:
            f.write(_PREFIX.pack(MAGIC, FORMAT_VERSION, len(blob)))
            f.write(blob)
            for _, value in tensors:
                f.write(np.ascontiguousarray(value, dtype="<f4").tobytes())
    except OSError as e:
        raise DataError(f"cannot write model {path}: {e}") from e


def _read_header(path: Union[str, Path]) -> Tuple[dict, int]:
    with open(path, "rb") as f:
        prefix = f.read(_PREFIX.size)
        if len(prefix) < _PREFIX.size:
            raise DataError(f"truncated model file {path}")
        magic, version, size = _PREFIX.unpack(prefix)
        if magic != MAGIC:
            raise DataError(f"{path} is not a CLCP model (magic {magic!r})")
        if version != FORMAT_VERSION:
            raise DataError(f"unsupported model format version {version}")
        return json.loads(f.read(size).decode("utf-8")), _PREFIX.size + size


def read_model_header(path: Union[str, Path]) -> dict:
    return _read_header(path)[0]


def load_model(path: Union[str, Path]) -> ClcpModel:
    try:
        header, offset = _read_header(path)
        raw = np.fromfile(path, dtype="<f4", offset=offset)
    except OSError as e:
        raise DataError(f"cannot read model {path}: {e}") from e
    if header.get("version") != ClcpModel.VERSION:
        raise DataError(f"unsupported model version {header.get('version')}")

    g = header["grid"]
    grid = FrequencyGrid(g["antennas"], np.array(g["wavelengths"]), g["antenna_spacing"], g["bandwidth_mhz"])
    model = ClcpModel(header["link_ids"], grid, ModelConfig(**header["config"]))
    expected = sum(int(np.prod(shape)) for _, shape in header["tensors"])
    if raw.size != expected:
        raise DataError(f"model {path} holds {raw.size} weights, header lists {expected}")
    pos = 0
    for name, shape in header["tensors"]:
        count = int(np.prod(shape))
        model.set_tensor(name, raw[pos:pos + count].astype(float).reshape(shape))
        pos += count
    return model


def model_path(directory: Union[str, Path], group_id: int) -> Path:
    return Path(directory) / f"group{group_id}.clcp"


def load_model_dir(directory: Union[str, Path]) -> Dict[int, ClcpModel]:
    """Every ``group<N>.clcp`` model in ``directory``, keyed by group id."""
    models = {}
    for path in sorted(Path(directory).glob("group*.clcp")):
        suffix = path.stem[len("group"):]
        if suffix.isdigit():
            models[int(suffix)] = load_model(path)
    return models
