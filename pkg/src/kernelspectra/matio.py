"""Matrix and eigenvalue-list file formats.

Two matrix encodings are supported:

- CSV, one matrix row per line, optional header line (skipped when the
  first row fails to parse as numbers);
- packed binary: a 16-byte header of magic ``KSPC`` (4 bytes), rows as
  little-endian uint32, cols as little-endian uint32, 4 reserved zero
  bytes, followed by rows*cols float64 values little-endian in
  column-major order.

Eigenvalue lists are one float per line with '#' metadata comments.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from kernelspectra.errors import IngestionError

MAGIC = b"KSPC"
HEADER = struct.Struct("<4sII4x")  # magic, rows, cols, 4 reserved bytes


def write_matrix_bin(X: np.ndarray, path) -> None:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("expected a 2-d matrix")
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, X.shape[0], X.shape[1]))
        fh.write(np.asfortranarray(X).tobytes(order="F"))


def read_matrix_bin(path) -> np.ndarray:
    with open(path, "rb") as fh:
        head = fh.read(HEADER.size)
        if len(head) != HEADER.size:
            raise IngestionError(f"{path}: truncated header")
        magic, rows, cols = HEADER.unpack(head)
        if magic != MAGIC:
            raise IngestionError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != rows * cols:
        raise IngestionError(
            f"{path}: expected {rows * cols} values for {rows}x{cols}, found {data.size}"
        )
    return np.asarray(data.reshape((rows, cols), order="F"))


def read_matrix_csv(path) -> np.ndarray:
    try:
        try:
            data = np.loadtxt(path, delimiter=",", ndmin=2)
        except ValueError:
            data = np.loadtxt(path, delimiter=",", ndmin=2, skiprows=1)
    except Exception as exc:
        raise IngestionError(f"{path}: cannot parse CSV matrix ({exc})") from exc
    return data


def read_matrix(path, expect_shape=None) -> np.ndarray:
    """Read a matrix by sniffing the format, optionally enforcing a shape."""
    path = str(path)
    with open(path, "rb") as fh:
        magic = fh.read(4)
    X = read_matrix_bin(path) if magic == MAGIC else read_matrix_csv(path)
    if expect_shape is not None and X.shape != tuple(expect_shape):
        raise IngestionError(
            f"{path}: expected shape {tuple(expect_shape)}, found {X.shape}"
        )
    return X


def write_eigenvalues(values, path, metadata: dict | None = None) -> None:
    lines = []
    meta = metadata or {}
    for key in sorted(meta):
        lines.append(f"# {key}={json.dumps(meta[key], sort_keys=True, default=str)}")
    lines.extend(f"{float(v)!r}" for v in values)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_eigenvalues(path) -> np.ndarray:
    vals = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                vals.append(float(line))
            except ValueError as exc:
                raise IngestionError(f"{path}: bad eigenvalue line {line!r}") from exc
    if not vals:
        raise IngestionError(f"{path}: no eigenvalues found")
    return np.asarray(vals, dtype=float)
