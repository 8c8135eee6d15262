"""File formats: the HOTP1 tensor container and feature/matrix CSV.

HOTP1 layout, all little-endian:

    bytes 0..3   magic b"HOTP"
    byte  4      format version (1)
    byte  5      tensor order r
    next 4*r     dims as u32
    rest         float64 coefficients, row-major

Feature CSV holds one vector per row. A header row is optional; when present
and its last column is named `weight`, that column supplies per-row weights.
Matrix CSV is plain numeric rows with no header.
"""

from __future__ import annotations

import csv
import math
import struct
from pathlib import Path

import numpy as np

from .errors import InputError
from .tensor import MAX_ORDER, DenseTensor, FeatureSet

MAGIC = b"HOTP"
VERSION = 1
_HEADER = struct.Struct("<4sBB")


def write_tensor(path, t: DenseTensor) -> None:
    payload = np.ascontiguousarray(t.data, dtype="<f8").tobytes()
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, VERSION, t.order))
        f.write(struct.pack(f"<{t.order}I", *t.dims))
        f.write(payload)


def read_tensor(path) -> DenseTensor:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise InputError(f"{path}: truncated header ({len(raw)} bytes)")
    magic, version, order = _HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise InputError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise InputError(f"{path}: unsupported version {version}")
    if not 1 <= order <= MAX_ORDER:
        raise InputError(f"{path}: unsupported order {order}")
    dims_end = _HEADER.size + 4 * order
    if len(raw) < dims_end:
        raise InputError(f"{path}: truncated dims block")
    dims = struct.unpack_from(f"<{order}I", raw, _HEADER.size)
    if any(d == 0 for d in dims):
        raise InputError(f"{path}: zero dimension in {dims}")
    count = math.prod(dims)
    expected = dims_end + 8 * count
    if len(raw) != expected:
        raise InputError(f"{path}: expected {expected} bytes, got {len(raw)}")
    data = np.frombuffer(raw, dtype="<f8", offset=dims_end, count=count).reshape(dims)
    return DenseTensor(data)


def _fmt(x: float) -> str:
    return repr(float(x))


def _parse_cell(cell: str, line: int, col: int, path) -> float:
    try:
        return float(cell)
    except ValueError:
        raise InputError(
            f"{path}: line {line}, column {col}: could not parse {cell!r} as a number"
        ) from None


def read_features_csv(path) -> FeatureSet:
    """Load a feature CSV, honoring an optional trailing weight column."""
    with open(path, newline="") as f:
        rows = [(i + 1, row) for i, row in enumerate(csv.reader(f)) if row]
    if not rows:
        raise InputError(f"{path}: no rows")
    first = [c.strip() for c in rows[0][1]]
    has_header = False
    for cell in first:
        try:
            float(cell)
        except ValueError:
            has_header = True
            break
    has_weights = has_header and first[-1].lower() == "weight"
    if has_header:
        ncols = len(first)
        rows = rows[1:]
        if not rows:
            raise InputError(f"{path}: header but no data rows")
    else:
        ncols = len(rows[0][1])
    vectors = []
    weights = [] if has_weights else None
    for line, row in rows:
        if len(row) != ncols:
            raise InputError(f"{path}: line {line}: expected {ncols} columns, got {len(row)}")
        vals = [_parse_cell(c.strip(), line, j + 1, path) for j, c in enumerate(row)]
        if has_weights:
            vectors.append(vals[:-1])
            weights.append(vals[-1])
        else:
            vectors.append(vals)
    if len(vectors[0]) < 1:
        raise InputError(f"{path}: rows have no feature columns")
    return FeatureSet(np.asarray(vectors), None if weights is None else np.asarray(weights))


def write_features_csv(path, features: FeatureSet, include_weights: bool = False) -> None:
    d = features.dim
    header = [f"f{j}" for j in range(d)]
    if include_weights:
        header.append("weight")
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for i in range(features.count):
            row = [_fmt(v) for v in features.vectors[i]]
            if include_weights:
                row.append(_fmt(features.weights[i]))
            w.writerow(row)


def read_matrix_csv(path) -> np.ndarray:
    """Load a headerless numeric CSV as a 2-d array."""
    with open(path, newline="") as f:
        rows = [(i + 1, row) for i, row in enumerate(csv.reader(f)) if row]
    if not rows:
        raise InputError(f"{path}: no rows")
    ncols = len(rows[0][1])
    out = []
    for line, row in rows:
        if len(row) != ncols:
            raise InputError(f"{path}: line {line}: expected {ncols} columns, got {len(row)}")
        out.append([_parse_cell(c.strip(), line, j + 1, path) for j, c in enumerate(row)])
    return np.asarray(out)


def write_matrix_csv(path, m) -> None:
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise InputError(f"expected a matrix, got ndim {m.ndim}")
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        for row in m:
            w.writerow([_fmt(v) for v in row])
