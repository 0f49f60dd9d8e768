"""Dense tensors and the multilinear algebra used by the estimators.

Tensors are plain float64 ``ndarray`` objects.  All index maps are
column-major (first index varies fastest): the mode-k unfolding of a
``p_1 x ... x p_K`` tensor is the ``p_k x p_{-k}`` matrix whose column
``j`` is the mode-k fiber whose remaining indices decode from ``j`` in
column-major order.  With this ordering

    mat_k(F x_1 A_1 ... x_K A_K) = A_k mat_k(F) (A_K kron ... kron A_1)^T

where the Kronecker product skips ``A_k`` and runs in descending mode order.

A tensor *series* is an array of shape ``(T, p_1, ..., p_K)``; time is the
leading axis.  Modes are 0-based in the Python API.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

from .errors import DomainError


def linear_index(multi_index: Sequence[int], dims: Sequence[int]) -> int:
    """Column-major ravel of a 1-based multi-index, returning a 1-based position.

    >>> linear_index((1, 2, 2), (2, 2, 2))
    7
    """
    if len(multi_index) != len(dims):
        raise DomainError("multi_index and dims must have the same length")
    pos, stride = 1, 1
    for m, extent in zip(multi_index, dims):
        if not 1 <= m <= extent:
            raise DomainError(f"index {m} outside 1..{extent}")
        pos += (m - 1) * stride
        stride *= extent
    return pos


def _check_mode(ndim: int, k: int) -> None:
    if not 0 <= k < ndim:
        raise DomainError(f"mode {k} out of range for a {ndim}-mode tensor")


def unfold(x: np.ndarray, k: int) -> np.ndarray:
    """Mode-k matricization, shape ``(p_k, p_{-k})``."""
    x = np.asarray(x, dtype=np.float64)
    _check_mode(x.ndim, k)
    return np.moveaxis(x, k, 0).reshape(x.shape[k], -1, order="F")


def fold(m: np.ndarray, k: int, shape: Sequence[int]) -> np.ndarray:
    """Inverse of :func:`unfold`."""
    m = np.asarray(m, dtype=np.float64)
    shape = tuple(int(s) for s in shape)
    _check_mode(len(shape), k)
    rest = shape[:k] + shape[k + 1:]
    if m.ndim != 2 or m.shape != (shape[k], int(np.prod(rest, dtype=np.int64))):
        raise DomainError(f"matrix of shape {m.shape} cannot fold to {shape} along mode {k}")
    return np.moveaxis(m.reshape((shape[k],) + rest, order="F"), 0, k)


def mode_product(x: np.ndarray, a: np.ndarray, k: int) -> np.ndarray:
    """Mode-k product ``x x_k a``; ``a`` is ``d x p_k``."""
    x = np.asarray(x, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    _check_mode(x.ndim, k)
    if a.ndim != 2 or a.shape[1] != x.shape[k]:
        raise DomainError(f"matrix with {a.shape[-1]} columns cannot act on mode of size {x.shape[k]}")
    return np.moveaxis(np.tensordot(a, x, axes=(1, k)), 0, k)


def multi_mode_product(x: np.ndarray, mats: Sequence[np.ndarray | None], offset: int = 0) -> np.ndarray:
    """Apply ``mats[j]`` along axis ``j + offset`` for every non-None entry.

    ``offset=1`` treats the leading axis of ``x`` as time.
    """
    for j, a in enumerate(mats):
        if a is not None:
            x = mode_product(x, a, j + offset)
    return x


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.kron(np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64))


def kron_excluding(loadings: Sequence[np.ndarray], k: int) -> np.ndarray:
    """``A_K kron ... kron A_{k+1} kron A_{k-1} kron ... kron A_1`` (skipping mode k).

    With a single mode the result is the 1x1 identity.
    """
    _check_mode(len(loadings), k)
    others = [np.asarray(a, dtype=np.float64) for j, a in enumerate(loadings) if j != k]
    if not others:
        return np.eye(1)
    return reduce(np.kron, reversed(others))


def as_series(x: np.ndarray, min_modes: int = 1) -> np.ndarray:
    """Validate a ``(T, p_1, ..., p_K)`` series and return it as float64."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim < 1 + min_modes:
        raise DomainError(f"expected a series of at least {min_modes}-mode tensors, got shape {x.shape}")
    if 0 in x.shape:
        raise DomainError(f"empty dimension in series shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DomainError("series contains non-finite values")
    return x


def unfold_series(x: np.ndarray, k: int) -> np.ndarray:
    """Mode-k unfolding of every slice, shape ``(T, p_k, p_{-k})``."""
    T = x.shape[0]
    _check_mode(x.ndim - 1, k)
    moved = np.moveaxis(x, k + 1, 1)
    return moved.reshape(T, x.shape[k + 1], -1, order="F")


@dataclass(frozen=True)
class LoadingSet:
    """Per-mode loading matrices ``A_k`` of shape ``(p_k, r_k)``."""

    loadings: tuple[np.ndarray, ...]

    def __post_init__(self):
        mats = tuple(np.asarray(a, dtype=np.float64) for a in self.loadings)
        for a in mats:
            if a.ndim != 2:
                raise DomainError("loading matrices must be 2-D")
        object.__setattr__(self, "loadings", mats)

    def __len__(self) -> int:
        return len(self.loadings)

    def __getitem__(self, k: int) -> np.ndarray:
        return self.loadings[k]

    def __iter__(self):
        return iter(self.loadings)

    @property
    def ranks(self) -> tuple[int, ...]:
        return tuple(a.shape[1] for a in self.loadings)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(a.shape[0] for a in self.loadings)

    def kron_excluding(self, k: int) -> np.ndarray:
        return kron_excluding(self.loadings, k)
