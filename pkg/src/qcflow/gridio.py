"""Binary grid formats.

QCF1 (sampled vector field), little endian::

    b"QCF1", u32 n, u32 counts[n], f64 (min, max) per axis,
    u32 nt, f64 t_min, f64 t_max,
    f64 data[nt][counts...][n]          (row-major, component fastest)

QCG1 (scalar grid function)::

    b"QCG1", u32 n, u32 counts[n], f64 (min, max) per axis,
    f64 values[counts...]               (row-major)

Boxes are cell-centred: ``counts[k]`` cells tile [min_k, max_k].
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .fields import VectorField, sampled
from .spaces import GridFunction


def _write_header(fh, magic: bytes, counts, lo, hi):
    fh.write(magic)
    fh.write(struct.pack("<I", len(counts)))
    fh.write(struct.pack(f"<{len(counts)}I", *counts))
    for a, b in zip(lo, hi):
        fh.write(struct.pack("<2d", float(a), float(b)))


def _read_header(buf: bytes, magic: bytes):
    if buf[:4] != magic:
        raise ConfigError(f"bad magic {buf[:4]!r}, expected {magic!r}")
    off = 4
    (n,) = struct.unpack_from("<I", buf, off)
    off += 4
    counts = struct.unpack_from(f"<{n}I", buf, off)
    off += 4 * n
    box = np.array(struct.unpack_from(f"<{2 * n}d", buf, off)).reshape(n, 2)
    off += 16 * n
    return n, tuple(counts), box[:, 0], box[:, 1], off


def write_grid_function(path, u: GridFunction) -> None:
    with open(path, "wb") as fh:
        _write_header(fh, b"QCG1", u.resolution, u.lo, u.hi)
        fh.write(np.ascontiguousarray(u.values, dtype="<f8").tobytes())


def read_grid_function(path) -> GridFunction:
    buf = Path(path).read_bytes()
    n, counts, lo, hi, off = _read_header(buf, b"QCG1")
    size = int(np.prod(counts))
    if len(buf) - off != 8 * size:
        raise ConfigError(f"{path}: payload has {len(buf) - off} bytes, expected {8 * size}")
    values = np.frombuffer(buf, dtype="<f8", count=size, offset=off).reshape(counts)
    return GridFunction(lo, hi, values.astype(float))


def write_field_grid(path, data, lo, hi, t_range=(0.0, 1.0)) -> None:
    data = np.asarray(data, dtype=float)
    if data.ndim != data.shape[-1] + 2:
        raise ValueError("field data must have shape (nt, N_1..N_n, n)")
    with open(path, "wb") as fh:
        _write_header(fh, b"QCF1", data.shape[1:-1], lo, hi)
        fh.write(struct.pack("<I2d", data.shape[0], float(t_range[0]), float(t_range[1])))
        fh.write(np.ascontiguousarray(data, dtype="<f8").tobytes())


def read_field_array(path):
    buf = Path(path).read_bytes()
    n, counts, lo, hi, off = _read_header(buf, b"QCF1")
    nt, t0, t1 = struct.unpack_from("<I2d", buf, off)
    off += 20
    shape = (nt,) + counts + (n,)
    size = int(np.prod(shape))
    if len(buf) - off != 8 * size:
        raise ConfigError(f"{path}: payload has {len(buf) - off} bytes, expected {8 * size}")
    data = np.frombuffer(buf, dtype="<f8", count=size, offset=off).reshape(shape).astype(float)
    return data, lo, hi, (t0, t1)


def read_field_grid(path, name: str | None = None) -> VectorField:
    data, lo, hi, t_range = read_field_array(path)
    return sampled(data, lo, hi, t_range, name=name or Path(path).stem)
