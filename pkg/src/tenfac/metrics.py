"""Accuracy metrics for fitted tensor factor models."""

from __future__ import annotations

import numpy as np

from .errors import DomainError

_RANK_RTOL = 1e-10


def _column_basis(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[1] == 0:
        raise DomainError(f"expected a non-empty matrix, got shape {a.shape}")
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    if s[-1] <= _RANK_RTOL * s[0]:
        raise DomainError("loading matrix is rank deficient")
    return u


def loading_distance(a_hat: np.ndarray, a: np.ndarray) -> float:
    """Distance in [0, 1] between the column spaces of two ``p x r`` matrices.

    Equals ``sqrt(1 - tr(Qh Qh^T Q Q^T) / r)`` with ``Q``, ``Qh`` orthonormal
    bases.  It is evaluated as ``||(I - Q Q^T) Qh||_F / sqrt(r)``, which is the
    same quantity without the cancellation in ``1 - tr(.)/r``.
    """
    a_hat, a = np.asarray(a_hat), np.asarray(a)
    if a_hat.shape != a.shape:
        raise DomainError(f"shape mismatch: {a_hat.shape} vs {a.shape}")
    qh, q = _column_basis(a_hat), _column_basis(a)
    resid = qh - q @ (q.T @ qh)
    d = np.linalg.norm(resid) / np.sqrt(a.shape[1])
    return float(min(max(d, 0.0), 1.0))


def common_mse(s_hat: np.ndarray, s: np.ndarray) -> float:
    """``(1/(T p)) sum_t ||S_hat_t - S_t||_F^2``."""
    s_hat, s = np.asarray(s_hat, dtype=np.float64), np.asarray(s, dtype=np.float64)
    if s_hat.shape != s.shape:
        raise DomainError(f"shape mismatch: {s_hat.shape} vs {s.shape}")
    return float(np.mean((s_hat - s) ** 2))
