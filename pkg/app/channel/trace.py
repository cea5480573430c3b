"""
Binary CSI trace files.

Layout (little-endian)::

    header:  magic "CLCPTRC1" | version u32 | M u16 | S u16 | links u32 | samples u32 | period_us u32
    records: for each sample, for each link:
             timestamp_us u64 | M*S complex values as float32 (real, imag), row-major by antenna
"""

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Optional, Sequence, Tuple, Union

import numpy as np

from app.channel.csi import FrequencyGrid, synthesize_csi
from app.channel.environment import Environment, advance, paths_for_link
from app.channel.impairments import inject_impairments
from app.errors import DataError
from app.schemas import ImpairmentConfig

MAGIC = b"CLCPTRC1"
VERSION = 1
HEADER = struct.Struct("<8sIHHIII")


@dataclass(frozen=True)
class TraceHeader:
    antennas: int
    subcarriers: int
    links: int
    samples: int
    period_us: int
    version: int = VERSION

    def pack(self) -> bytes:
        return HEADER.pack(MAGIC, self.version, self.antennas, self.subcarriers,
                           self.links, self.samples, self.period_us)

    def record_dtype(self) -> np.dtype:
        return np.dtype([("timestamp_us", "<u8"),
                         ("values", "<c8", (self.antennas, self.subcarriers))])


@dataclass
class Trace:
    header: TraceHeader
    timestamps_us: np.ndarray   # (samples, links)
    values: np.ndarray          # (samples, links, M, S) complex


def write_trace(path: Union[str, Path], header: TraceHeader,
                samples: Iterable[Tuple[int, np.ndarray]]) -> None:
    """Stream ``(timestamp_us, values[links, M, S])`` samples into ``path``."""
    dtype = header.record_dtype()
    written = 0
    try:
        with open(path, "wb") as f:
            f.write(header.pack())
            for timestamp, values in samples:
                values = np.asarray(values)
                if values.shape != (header.links, header.antennas, header.subcarriers):
                    raise DataError(f"sample shape {values.shape} does not match header")
                rec = np.zeros(header.links, dtype=dtype)
                rec["timestamp_us"] = timestamp
                rec["values"] = values
                f.write(rec.tobytes())
                written += 1
    except OSError as e:
        raise DataError(f"cannot write trace {path}: {e}") from e
    if written != header.samples:
        raise DataError(f"wrote {written} samples, header promised {header.samples}")


def read_header(path: Union[str, Path]) -> TraceHeader:
    try:
        with open(path, "rb") as f:
            raw = f.read(HEADER.size)
    except OSError as e:
        raise DataError(f"cannot read trace {path}: {e}") from e
    if len(raw) < HEADER.size:
        raise DataError(f"truncated trace header in {path}")
    magic, version, m, s, links, samples, period = HEADER.unpack(raw)
    if magic != MAGIC:
        raise DataError(f"{path} is not a CLCP trace (magic {magic!r})")
    if version != VERSION:
        raise DataError(f"unsupported trace version {version}")
    return TraceHeader(m, s, links, samples, period, version)


def read_trace(path: Union[str, Path]) -> Trace:
    header = read_header(path)
    dtype = header.record_dtype()
    expected = HEADER.size + dtype.itemsize * header.links * header.samples
    size = Path(path).stat().st_size
    if size != expected:
        raise DataError(f"corrupt trace {path}: {size} bytes, expected {expected}")
    rec = np.fromfile(path, dtype=dtype, offset=HEADER.size)
    rec = rec.reshape(header.samples, header.links)
    return Trace(header, rec["timestamp_us"].astype(np.int64),
                 rec["values"].astype(np.complex128))


def simulate_trace(env: Environment, grid: FrequencyGrid, samples: int, period_us: int,
                   impairments: Optional[ImpairmentConfig] = None,
                   rng: Optional[np.random.Generator] = None,
                   link_ids: Optional[Sequence[int]] = None) -> Iterator[Tuple[int, np.ndarray]]:
    """Yield one ``(timestamp_us, values)`` sample per period while the environment moves."""
    ids = list(link_ids) if link_ids is not None else env.link_ids()
    if impairments is not None and rng is None:
        rng = np.random.default_rng(env.rng_seed)
    for n in range(samples):
        t_us = n * period_us
        block = np.empty((len(ids), grid.antennas, grid.subcarriers), dtype=complex)
        for j, link in enumerate(ids):
            csi = synthesize_csi(paths_for_link(env, link), grid, t_us)
            if impairments is not None:
                csi, _ = inject_impairments(csi, rng, impairments, packet_index=n)
            block[j] = csi.values
        yield t_us, block
        env = advance(env, period_us * 1e-6)
