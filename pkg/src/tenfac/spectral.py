"""Symmetric eigendecomposition with fixed ordering and sign conventions."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import DomainError

# entries within this relative distance of the largest |v_i| count as ties
_SIGN_TIE_RTOL = 1e-10


class EigenResult(NamedTuple):
    values: np.ndarray
    vectors: np.ndarray


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    out = vectors.copy()
    for j in range(out.shape[1]):
        v = out[:, j]
        mag = np.abs(v)
        lead = int(np.argmax(mag >= mag.max() * (1 - _SIGN_TIE_RTOL)))
        if v[lead] < 0:
            out[:, j] = -v
    return out


def sym_eigh(m: np.ndarray) -> EigenResult:
    """Full decomposition of ``(m + m.T) / 2``, eigenvalues descending."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DomainError("matrix contains non-finite values")
    vals, vecs = np.linalg.eigh((m + m.T) / 2)
    return EigenResult(vals[::-1].copy(), _fix_signs(vecs[:, ::-1]))


def top_eigs(m: np.ndarray, r: int) -> EigenResult:
    """Leading ``r`` eigenpairs of a symmetric matrix.

    In every returned eigenvector the entry of largest magnitude is positive
    (lowest index wins a tie).  For repeated eigenvalues only the spanned
    subspace is meaningful.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or not 1 <= r <= m.shape[0]:
        raise DomainError(f"requested {r} eigenpairs from a matrix of shape {m.shape}")
    full = sym_eigh(m)
    return EigenResult(full.values[:r], full.vectors[:, :r])
