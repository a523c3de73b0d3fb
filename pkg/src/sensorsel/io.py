"""Matrix files: comma-separated text and the little-endian DMAT binary.

CSV: one variable per line, snapshots separated by commas; lines starting
with ``#`` and blank lines are skipped.

DMAT: ``b"DMAT"``, version byte ``0x01``, uint32 rows, uint32 cols, then
``rows * cols`` float64 values in row-major order, all little-endian.
"""

from __future__ import annotations

import os
import struct

import numpy as np

from .errors import InvalidMatrix, ParseError
from .linalg import as_matrix

DMAT_MAGIC = b"DMAT"
DMAT_VERSION = 1
_HEADER = struct.Struct("<4sBII")


def infer_format(path) -> str:
    return "dmat" if os.fspath(path).lower().endswith(".dmat") else "csv"


def parse_csv(text: str) -> np.ndarray:
    rows: list[list[float]] = []
    width = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split(",")
        try:
            row = [float(tok) for tok in fields]
        except ValueError:
            bad = next(t for t in fields if not _is_float(t))
            raise ParseError(f"not a number: {bad.strip()!r}", line=lineno) from None
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ParseError(f"expected {width} values, found {len(row)}", line=lineno)
        if not all(np.isfinite(row)):
            raise InvalidMatrix(f"non-finite value on line {lineno}")
        rows.append(row)
    if not rows:
        raise ParseError("no data rows")
    return np.array(rows, dtype=np.float64)


def _is_float(tok: str) -> bool:
    try:
        float(tok)
    except ValueError:
        return False
    return True


def format_csv(a: np.ndarray) -> str:
    # repr gives the shortest string that round-trips exactly
    return "".join(",".join(repr(float(v)) for v in row) + "\n" for row in a)


def parse_dmat(data: bytes) -> np.ndarray:
    if len(data) < _HEADER.size:
        raise ParseError(f"truncated header ({len(data)} bytes)", offset=len(data))
    magic, version, rows, cols = _HEADER.unpack_from(data, 0)
    if magic != DMAT_MAGIC:
        raise ParseError(f"bad magic {magic!r}", offset=0)
    if version != DMAT_VERSION:
        raise ParseError(f"unsupported version {version}", offset=4)
    expected = rows * cols * 8
    payload = len(data) - _HEADER.size
    if payload != expected:
        raise ParseError(
            f"payload is {payload} bytes, header promises {rows}x{cols} = {expected}",
            offset=_HEADER.size,
        )
    if rows == 0 or cols == 0:
        raise ParseError(f"empty shape {rows}x{cols}", offset=5)
    values = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).reshape(rows, cols)
    if not np.all(np.isfinite(values)):
        raise InvalidMatrix("non-finite value in DMAT payload")
    return values.astype(np.float64)


def format_dmat(a: np.ndarray) -> bytes:
    rows, cols = a.shape
    return _HEADER.pack(DMAT_MAGIC, DMAT_VERSION, rows, cols) + np.ascontiguousarray(
        a, dtype="<f8"
    ).tobytes()


def load_matrix(path, format: str | None = None) -> np.ndarray:
    fmt = format or infer_format(path)
    if fmt == "dmat":
        with open(path, "rb") as fh:
            return parse_dmat(fh.read())
    if fmt == "csv":
        with open(path, encoding="utf-8") as fh:
            return parse_csv(fh.read())
    raise ValueError(f"unknown matrix format {fmt!r}")


def save_matrix(path, a, format: str | None = None) -> None:
    a = as_matrix(a)
    fmt = format or infer_format(path)
    if fmt == "dmat":
        with open(path, "wb") as fh:
            fh.write(format_dmat(a))
    elif fmt == "csv":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(format_csv(a))
    else:
        raise ValueError(f"unknown matrix format {fmt!r}")
