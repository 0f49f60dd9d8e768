"""Eigenvalue-ratio selection of the per-mode factor numbers."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError
from .estimation import mode_covariance, projected_covariance
from .spectral import sym_eigh
from .tensor import LoadingSet, as_series


@dataclass(frozen=True)
class RankEstimate:
    ranks: tuple[int, ...]
    ratio_traces: tuple[np.ndarray, ...]
    iterations: int
    converged: bool


def penalty_delta(T: int, shape: Sequence[int], k: int) -> float:
    """``1/sqrt(T p_-k) + 1/p_k`` for 0-based mode ``k``."""
    pk = int(shape[k])
    p_minus = math.prod(int(s) for s in shape) // pk
    return 1.0 / math.sqrt(T * p_minus) + 1.0 / pk


def trace_constant(m: np.ndarray) -> float:
    """Sum of all eigenvalues of a symmetric matrix, i.e. its trace."""
    return float(np.trace(np.asarray(m, dtype=np.float64)))


# Penalty-constant rules.  "mean" (trace / p_k, the average eigenvalue) is the
# default: it matches reference recovery rates; "trace" penalizes p_k times
# harder and almost never selects more than one factor at p_k = 10.
C_RULES = ("mean", "trace")


def penalty_constant(m: np.ndarray, rule: str = "mean") -> float:
    if rule == "mean":
        return trace_constant(m) / m.shape[0]
    if rule == "trace":
        return trace_constant(m)
    raise DomainError(f"unknown penalty rule {rule!r}; expected one of {C_RULES}")


def ratio_trace(eigenvalues: np.ndarray, r_max: int, penalty: float) -> np.ndarray:
    """Penalized ratios ``lambda_j / (lambda_{j+1} + penalty)`` for j = 1..r_max."""
    lam = np.asarray(eigenvalues, dtype=np.float64)
    return lam[:r_max] / (lam[1:r_max + 1] + penalty)


def select(ratios: np.ndarray) -> int:
    # np.argmax returns the first maximum: ties go to the smaller rank
    return int(np.argmax(ratios)) + 1


def _check_rmax(x: np.ndarray, r_max: int) -> None:
    T, dims = x.shape[0], x.shape[1:]
    if not 1 <= r_max < min(min(dims), T):
        raise DomainError(f"r_max={r_max} must satisfy 1 <= r_max < min(min_k p_k, T) = {min(min(dims), T)}")


def _ratios(m: np.ndarray, lam: np.ndarray, r_max: int, delta: float, c: float | None,
            rule: str) -> np.ndarray:
    const = penalty_constant(m, rule) if c is None else c
    return ratio_trace(lam, r_max, const * delta)


def ie_er(x: np.ndarray, r_max: int = 8, c: float | None = None, rule: str = "mean") -> RankEstimate:
    """Ratio criterion on the mode-wise sample covariances.

    ``c`` fixes the penalty constant; otherwise it is recomputed from each
    covariance with ``rule`` (see :func:`penalty_constant`).
    """
    x = as_series(x, min_modes=2)
    _check_rmax(x, r_max)
    T, dims = x.shape[0], x.shape[1:]
    traces = []
    for k in range(len(dims)):
        m = mode_covariance(x, k)
        traces.append(_ratios(m, sym_eigh(m).values, r_max, penalty_delta(T, dims, k), c, rule))
    traces = tuple(traces)
    return RankEstimate(tuple(select(t) for t in traces), traces, 0, True)


def pe_er(x: np.ndarray, r_max: int = 8, max_sweeps: int = 10, c: float | None = None,
          rule: str = "mean", update_from_projected: bool = False) -> RankEstimate:
    """Iterated ratio criterion on projected covariances.

    Starts from loadings of rank ``r_max`` in every mode.  Each sweep picks a
    rank per mode from the projected covariance, then rebuilds that mode's
    loadings from the top eigenvectors of the plain mode covariance (or of the
    projected one with ``update_from_projected``).  Stops when the ranks
    repeat or after ``max_sweeps``.
    """
    x = as_series(x, min_modes=2)
    _check_rmax(x, r_max)
    if max_sweeps < 1:
        raise DomainError("max_sweeps must be at least 1")
    T, dims = x.shape[0], x.shape[1:]
    K = len(dims)
    base = [sym_eigh(mode_covariance(x, k)) for k in range(K)]
    if not any(np.any(e.values) for e in base):
        raise DomainError("series is identically zero")
    ranks = (r_max,) * K
    loadings = LoadingSet(tuple(math.sqrt(dims[k]) * base[k].vectors[:, :r_max] for k in range(K)))
    traces: tuple[np.ndarray, ...] = ()
    converged = False
    sweep = 0
    for sweep in range(1, max_sweeps + 1):
        projected = [projected_covariance(x, loadings, k) for k in range(K)]
        spectra = [sym_eigh(m) for m in projected]
        traces = tuple(_ratios(m, e.values, r_max, penalty_delta(T, dims, k), c, rule)
                       for k, (m, e) in enumerate(zip(projected, spectra)))
        new = tuple(select(t) for t in traces)
        source = spectra if update_from_projected else base
        loadings = LoadingSet(tuple(math.sqrt(dims[k]) * source[k].vectors[:, :new[k]] for k in range(K)))
        if new == ranks:
            converged = True
            ranks = new
            break
        ranks = new
    return RankEstimate(ranks, traces, sweep, converged)
