"""Plain-CSV matrix files: one row per line, no header, ``%.17g`` values."""
from __future__ import annotations

import os

import numpy as np

from .errors import InputError


def read_matrix(path: str | os.PathLike) -> np.ndarray:
    try:
        with open(path) as fh:
            rows = [line.strip() for line in fh if line.strip() and not line.startswith("#")]
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc
    if not rows:
        raise InputError(f"{path}: empty matrix file")
    try:
        data = [[float(v) for v in row.split(",")] for row in rows]
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc
    width = {len(r) for r in data}
    if len(width) != 1:
        raise InputError(f"{path}: ragged rows (widths {sorted(width)})")
    M = np.array(data, dtype=np.float64)
    if not np.all(np.isfinite(M)):
        raise InputError(f"{path}: contains NaN or Inf")
    return M


def format_row(values) -> str:
    return ",".join("%.17g" % v for v in values)


def write_matrix(path: str | os.PathLike, M) -> None:
    A = np.asarray(M, dtype=np.float64)
    if A.ndim == 1:
        A = A[:, None]
    with open(path, "w") as fh:
        for row in A:
            fh.write(format_row(row) + "\n")
