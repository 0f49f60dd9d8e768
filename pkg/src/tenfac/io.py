"""Readers and writers for tensor series and matrices.

TSR1 layout: one ASCII header line ``TSR1 K p_1 ... p_K T`` terminated by a
newline, followed by ``T * prod(p)`` little-endian float64 values.  Each slice
is stored column-major; slices follow in time order.
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DomainError

MAGIC = "TSR1"


def write_tsr(path: str | os.PathLike, x: np.ndarray) -> None:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim < 2:
        raise DomainError("a tensor series needs a time axis and at least one mode")
    T, shape = x.shape[0], x.shape[1:]
    header = " ".join([MAGIC, str(len(shape)), *map(str, shape), str(T)]) + "\n"
    flat = np.concatenate([s.ravel(order="F") for s in x]).astype("<f8")
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(flat.tobytes())


def read_tsr(path: str | os.PathLike) -> np.ndarray:
    raw = Path(path).read_bytes()
    nl = raw.find(b"\n")
    if nl < 0:
        raise DomainError(f"{path}: missing TSR1 header")
    fields = raw[:nl].decode("ascii").split()
    if not fields or fields[0] != MAGIC:
        raise DomainError(f"{path}: not a TSR1 file")
    try:
        nums = [int(f) for f in fields[1:]]
    except ValueError as exc:
        raise DomainError(f"{path}: malformed TSR1 header") from exc
    K = nums[0] if nums else 0
    if K < 1 or len(nums) != K + 2 or min(nums[1:]) < 1:
        raise DomainError(f"{path}: malformed TSR1 header")
    shape, T = tuple(nums[1:K + 1]), nums[K + 1]
    data = np.frombuffer(raw[nl + 1:], dtype="<f8")
    size = int(np.prod(shape))
    if data.size != T * size:
        raise DomainError(f"{path}: expected {T * size} values, found {data.size}")
    rows = data.astype(np.float64).reshape(T, size)
    return np.stack([r.reshape(shape, order="F") for r in rows])


def write_series_csv(path: str | os.PathLike, x: np.ndarray) -> None:
    """One row per slice, entries column-major, no header."""
    x = np.asarray(x, dtype=np.float64)
    rows = np.stack([s.ravel(order="F") for s in x])
    np.savetxt(path, rows, delimiter=",", fmt="%.17g")


def read_series_csv(path: str | os.PathLike, shape: Sequence[int]) -> np.ndarray:
    rows = np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)
    shape = tuple(int(s) for s in shape)
    if rows.shape[1] != int(np.prod(shape)):
        raise DomainError(f"{path}: {rows.shape[1]} columns do not match shape {shape}")
    return np.stack([r.reshape(shape, order="F") for r in rows])


def write_matrix_csv(path: str | os.PathLike, m: np.ndarray) -> None:
    np.savetxt(path, np.asarray(m, dtype=np.float64), delimiter=",", fmt="%.17g")


def read_matrix_csv(path: str | os.PathLike) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)


def read_series(path: str | os.PathLike, shape: Sequence[int] | None = None) -> np.ndarray:
    """Dispatch on extension: ``.csv`` needs ``shape``, anything else is TSR1."""
    if str(path).lower().endswith(".csv"):
        if shape is None:
            raise DomainError("reading a CSV series requires the slice shape")
        return read_series_csv(path, shape)
    return read_tsr(path)
