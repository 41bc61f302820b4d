"""
File formats: CSV tables, JSON reports and binary snapshots.

Every writer goes through a temporary file in the target directory and an
atomic rename, so readers never see partial files.
"""

from __future__ import annotations

import csv
import json
import os
import struct
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import DataError

SNAPSHOT_MAGIC = b"WAVECOMPOSITE\x00\x00\x01"
SNAPSHOT_VERSION = 1
_HEADER = struct.Struct("<16sIIQddd")
SNAPSHOT_COLUMNS = ("x", "v", "u", "theta", "vbar", "ubar", "thetabar")


@contextmanager
def atomic_open(path, mode="w", **kw):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode, **kw) as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(x) -> str:
    return "%.16e" % x


def write_csv(path, header, columns):
    """Write equal-length columns with a header row, 17 significant digits."""
    cols = [np.asarray(c, dtype=float).ravel() for c in columns]
    if len(header) != len(cols):
        raise DataError("header and column count differ")
    if len({c.size for c in cols}) > 1:
        raise DataError("columns differ in length")
    with atomic_open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in zip(*cols):
            w.writerow([_fmt(v) for v in row])


def read_csv(path):
    """Return ``(header, dict name -> array)``."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataError(f"{path}: empty CSV")
    header = rows[0]
    data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float).reshape(-1, len(header))
    return header, {h: data[:, i] for i, h in enumerate(header)}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        if np.isnan(f):
            return "nan"
        if np.isinf(f):
            return "inf" if f > 0 else "-inf"
        return f
    return obj


def write_json(path, obj):
    with atomic_open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


class Snapshot(NamedTuple):
    t: float
    x_min: float
    x_max: float
    columns: np.ndarray      # (ncols, ncells)

    def column(self, name: str) -> np.ndarray:
        return self.columns[SNAPSHOT_COLUMNS.index(name)]


def write_snapshot(path, t: float, x_min: float, x_max: float, columns):
    cols = np.ascontiguousarray(np.asarray(columns, dtype="<f8"))
    if cols.ndim != 2:
        raise DataError("snapshot columns must form a 2-D array")
    ncols, ncells = cols.shape
    with atomic_open(path, "wb") as fh:
        fh.write(_HEADER.pack(SNAPSHOT_MAGIC, SNAPSHOT_VERSION, ncols, ncells, float(t),
                              float(x_min), float(x_max)))
        fh.write(cols.tobytes())


def read_snapshot(path) -> Snapshot:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise DataError(f"{path}: truncated header")
    magic, ver, ncols, ncells, t, xmin, xmax = _HEADER.unpack_from(raw)
    if magic != SNAPSHOT_MAGIC:
        raise DataError(f"{path}: bad magic")
    if ver != SNAPSHOT_VERSION:
        raise DataError(f"{path}: unsupported version {ver}")
    body = raw[_HEADER.size:]
    if len(body) != 8 * ncols * ncells:
        raise DataError(f"{path}: expected {8 * ncols * ncells} data bytes, found {len(body)}")
    cols = np.frombuffer(body, dtype="<f8").reshape(ncols, ncells).astype(float)
    return Snapshot(t, xmin, xmax, cols)
