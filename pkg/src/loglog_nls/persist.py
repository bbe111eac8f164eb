"""Binary checkpoints and comma-separated time series."""

from __future__ import annotations

import csv
import io
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"NLSL"
VERSION = 1
_HEADER = struct.Struct("<4sIIIdd")


class CheckpointError(ValueError):
    """Malformed or incompatible checkpoint file."""


@dataclass(frozen=True)
class Checkpoint:
    n: int
    N: int
    R_max: float
    time: float
    values: np.ndarray


def encode_checkpoint(n: int, R_max: float, time: float, values: np.ndarray) -> bytes:
    v = np.ascontiguousarray(values, dtype=np.complex128)
    if v.ndim != 1:
        raise ValueError("persist: checkpoint values must be one-dimensional")
    body = np.empty(2 * v.size, dtype="<f8")
    body[0::2] = v.real
    body[1::2] = v.imag
    return _HEADER.pack(MAGIC, VERSION, int(n), v.size, float(R_max), float(time)) + body.tobytes()


def decode_checkpoint(data: bytes) -> Checkpoint:
    if len(data) < _HEADER.size:
        raise CheckpointError("persist: checkpoint shorter than its header")
    magic, version, n, N, R_max, time = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise CheckpointError(f"persist: bad magic {magic!r}")
    if version != VERSION:
        raise CheckpointError(f"persist: unsupported checkpoint version {version}")
    expected = _HEADER.size + 16 * N
    if len(data) != expected:
        raise CheckpointError(f"persist: checkpoint has {len(data)} bytes, expected {expected}")
    body = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
    values = body[0::2].astype(np.float64) + 1j * body[1::2].astype(np.float64)
    return Checkpoint(n=n, N=N, R_max=R_max, time=time, values=values)


def write_checkpoint(path, n: int, R_max: float, time: float, values: np.ndarray) -> None:
    Path(path).write_bytes(encode_checkpoint(n, R_max, time, values))


def read_checkpoint(path) -> Checkpoint:
    return decode_checkpoint(Path(path).read_bytes())


def scalars_csv(scalars: dict, names) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(names))
    for row in zip(*(scalars[k] for k in names)):
        w.writerow([f"{float(v):.17g}" for v in row])
    return buf.getvalue()


def read_scalars_csv(text: str) -> dict[str, np.ndarray]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise ValueError("persist: empty scalars file")
    head, body = rows[0], rows[1:]
    cols = list(zip(*body)) if body else [()] * len(head)
    return {h: np.array([float(x) for x in col]) for h, col in zip(head, cols)}
