"""Projected-PCA estimation of Tucker tensor factor models.

The model for a series ``x`` of shape ``(T, p_1, ..., p_K)`` is

    X_t = F_t x_1 A_1 ... x_K A_K + E_t,      A_k^T A_k / p_k = I.

Every estimator returns loadings scaled so that ``A_k^T A_k = p_k I``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import DomainError, ResourceError
from .metrics import loading_distance
from .spectral import top_eigs
from .tensor import LoadingSet, as_series, multi_mode_product, unfold_series

STAR_CAP = 4096


def _prod(xs) -> int:
    return math.prod(int(v) for v in xs)


def _validate(x: np.ndarray, ranks: Sequence[int]) -> tuple[np.ndarray, tuple[int, ...]]:
    x = as_series(x, min_modes=2)
    dims = x.shape[1:]
    ranks = tuple(int(r) for r in ranks)
    if len(ranks) != len(dims):
        raise DomainError(f"{len(ranks)} ranks given for a {len(dims)}-mode series")
    T = x.shape[0]
    if T < 2:
        raise DomainError("need at least T >= 2 time slices")
    p = _prod(dims)
    for k, (r, pk) in enumerate(zip(ranks, dims)):
        if not 1 <= r <= min(pk, T * p // pk):
            raise DomainError(
                f"rank r_{k + 1}={r} violates 1 <= r_k <= min(p_k, T*p_-k) = {min(pk, T * p // pk)}")
    return x, ranks


def mode_covariance(x: np.ndarray, k: int) -> np.ndarray:
    """Scaled mode-wise sample covariance ``(1/(Tp)) sum_t X_{k,t} X_{k,t}^T``."""
    T = x.shape[0]
    z = np.moveaxis(x, k + 1, 0).reshape(x.shape[k + 1], -1)
    return z @ z.T / (T * _prod(x.shape[1:]))


def projected_covariance(x: np.ndarray, loadings: LoadingSet, k: int) -> np.ndarray:
    """Covariance of the data projected through every loading except mode k.

    ``Y_{k,t} = X_{k,t} B_k / p_{-k}`` and the result is
    ``(1/(T p_k)) sum_t Y_{k,t} Y_{k,t}^T``.  The product ``X_{k,t} B_k`` is
    formed by mode products rather than by materializing ``B_k``.
    """
    T, dims = x.shape[0], x.shape[1:]
    pk = dims[k]
    p_minus = _prod(dims) // pk
    mats = [None if j == k else a.T for j, a in enumerate(loadings)]
    y = multi_mode_product(x, mats, offset=1) / p_minus
    z = np.moveaxis(y, k + 1, 0).reshape(pk, -1)
    return z @ z.T / (T * pk)


def _pca(m: np.ndarray, r: int, label: str) -> tuple[np.ndarray, np.ndarray]:
    if not np.any(m):
        raise DomainError(f"{label} is identically zero; loadings are not identified")
    vals, vecs = top_eigs(m, r)
    return math.sqrt(m.shape[0]) * vecs, vals


def _initial(x, ranks):
    out = [_pca(mode_covariance(x, k), r, f"mode-{k + 1} covariance") for k, r in enumerate(ranks)]
    return LoadingSet(tuple(a for a, _ in out)), tuple(v for _, v in out)


def _check_projectable(T: int, ranks: Sequence[int]) -> None:
    r = _prod(ranks)
    for k, rk in enumerate(ranks):
        if rk > T * (r // rk):
            raise DomainError(
                f"rank r_{k + 1}={rk} exceeds T*r_-k = {T * (r // rk)}; the projected covariance "
                "cannot have the requested rank")


def _project(x, ranks, init: LoadingSet):
    out = [_pca(projected_covariance(x, init, k), r, f"mode-{k + 1} projected covariance")
           for k, r in enumerate(ranks)]
    return LoadingSet(tuple(a for a, _ in out)), tuple(v for _, v in out)


def initial_loadings(x: np.ndarray, ranks: Sequence[int]) -> LoadingSet:
    """Mode-wise PCA: ``sqrt(p_k)`` times the top eigenvectors of each mode covariance."""
    x, ranks = _validate(x, ranks)
    return _initial(x, ranks)[0]


def projected_loadings(x: np.ndarray, ranks: Sequence[int] | None = None,
                       init: LoadingSet | None = None) -> LoadingSet:
    """One-step projected estimator.

    Every mode is projected through the same ``init`` loadings (initial PCA
    estimates when omitted); there is no sequential plug-in within the step.
    """
    if ranks is None:
        if init is None:
            raise DomainError("either ranks or init loadings are required")
        ranks = init.ranks
    x, ranks = _validate(x, ranks)
    _check_projectable(x.shape[0], ranks)
    if init is None:
        init = _initial(x, ranks)[0]
    elif init.ranks != ranks or init.dims != x.shape[1:]:
        raise DomainError(f"init loadings {init.dims}/{init.ranks} do not match data/ranks")
    return _project(x, ranks, init)[0]


def _star(x, ranks, cap):
    T, dims = x.shape[0], x.shape[1:]
    p = _prod(dims)
    r = _prod(ranks)
    mats, vals = [], []
    for k, rk in enumerate(ranks):
        p_minus, r_minus = p // dims[k], r // rk
        if p_minus > cap:
            raise ResourceError(
                f"mode {k + 1}: p_-k = {p_minus} exceeds the cap of {cap} for the p_-k x p_-k "
                "covariance; use the one-step projected estimator ('pe') instead")
        if r_minus > p_minus:
            raise DomainError(f"r_-k = {r_minus} exceeds p_-k = {p_minus} for mode {k + 1}")
        xk = unfold_series(x, k)
        m_minus = np.einsum("tij,tik->jk", xk, xk) / (T * p)
        b, _ = _pca(m_minus, r_minus, f"mode-{k + 1} complement covariance")
        y = xk @ b / p_minus
        m = np.einsum("tij,tkj->ik", y, y) / (T * dims[k])
        a, v = _pca(m, rk, f"mode-{k + 1} projected covariance")
        mats.append(a)
        vals.append(v)
    return LoadingSet(tuple(mats)), tuple(vals)


def projected_loadings_star(x: np.ndarray, ranks: Sequence[int], cap: int = STAR_CAP) -> LoadingSet:
    """Projected estimator whose projection matrix comes from the PCA of the
    ``p_{-k} x p_{-k}`` complement covariance instead of Kronecker products of
    initial loadings.  Raises :class:`ResourceError` when ``p_{-k} > cap``.
    """
    x, ranks = _validate(x, ranks)
    _check_projectable(x.shape[0], ranks)
    return _star(x, ranks, cap)[0]


def loading_path(x: np.ndarray, ranks: Sequence[int], steps: int) -> Iterator[tuple[LoadingSet, tuple]]:
    """Yield ``(loadings, eigenvalues)`` for steps ``0..steps`` of the
    iterated projection; step 0 is the initial estimator."""
    x, ranks = _validate(x, ranks)
    _check_projectable(x.shape[0], ranks)
    current = _initial(x, ranks)
    yield current
    for _ in range(steps):
        current = _project(x, ranks, current[0])
        yield current


def _max_distance(a: LoadingSet, b: LoadingSet) -> float:
    return max(loading_distance(u, v) for u, v in zip(a, b))


def _iterate(x, ranks, max_steps, tol):
    if max_steps < 1:
        raise DomainError("max_steps must be at least 1")
    prev = None
    used = 0
    for s, current in enumerate(loading_path(x, ranks, max_steps)):
        used = s + 1
        if s >= 1 and _max_distance(current[0], prev[0]) < tol:
            break
        prev = current
    return current, used


def iterative_loadings(x: np.ndarray, ranks: Sequence[int], max_steps: int = 10,
                       tol: float = 1e-6) -> tuple[LoadingSet, int]:
    """Repeat the projection step, feeding each step's loadings into the next.

    Stops once the largest subspace distance between consecutive steps falls
    below ``tol`` or after ``max_steps`` projections.  The returned count
    includes the initial step, so a run stopped after the first projection
    reports 2.
    """
    (loadings, _), used = _iterate(x, ranks, max_steps, tol)
    return loadings, used


def estimate_factors(x: np.ndarray, loadings: LoadingSet) -> np.ndarray:
    """``F_t = (1/p) X_t x_1 A_1^T ... x_K A_K^T`` for every slice."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != len(loadings) + 1 or x.shape[1:] != loadings.dims:
        raise DomainError(f"series shape {x.shape[1:]} does not match loadings {loadings.dims}")
    return multi_mode_product(x, [a.T for a in loadings], offset=1) / _prod(loadings.dims)


def reconstruct(factors: np.ndarray, loadings: LoadingSet) -> np.ndarray:
    """Common components ``F_t x_1 A_1 ... x_K A_K``."""
    factors = np.asarray(factors, dtype=np.float64)
    if factors.ndim != len(loadings) + 1 or factors.shape[1:] != loadings.ranks:
        raise DomainError(f"factor shape {factors.shape[1:]} does not match ranks {loadings.ranks}")
    return multi_mode_product(factors, list(loadings), offset=1)


@dataclass(frozen=True)
class TfmFit:
    loadings: LoadingSet
    factors: np.ndarray
    eigenvalues: tuple[np.ndarray, ...]
    method: str
    iterations_used: int
    mean: np.ndarray | None = field(default=None, repr=False)
    scale: np.ndarray | None = field(default=None, repr=False)

    @property
    def ranks(self) -> tuple[int, ...]:
        return self.loadings.ranks

    def transform(self, x: np.ndarray) -> np.ndarray:
        """Apply the fit's centering/scaling to new data."""
        x = np.asarray(x, dtype=np.float64)
        if self.mean is not None:
            x = x - self.mean
        if self.scale is not None:
            x = x / self.scale
        return x


def estimate_common_components(x: np.ndarray, fit: TfmFit) -> np.ndarray:
    if np.shape(x)[1:] != fit.loadings.dims or np.shape(x)[0] != fit.factors.shape[0]:
        raise DomainError("series does not match the fitted model")
    return reconstruct(fit.factors, fit.loadings)


def parse_estimator(tag: str) -> tuple[str, int]:
    """Map ``ie``, ``pe``, ``pe-star`` or ``iterate:S`` to ``(kind, steps)``."""
    tag = tag.strip().lower()
    if tag in ("ie", "pe", "pe-star"):
        return tag, 0
    if tag.startswith("iterate:"):
        try:
            steps = int(tag.split(":", 1)[1])
        except ValueError:
            steps = 0
        if steps >= 1:
            return "iterate", steps
    raise DomainError(f"unknown estimator {tag!r}; expected ie, pe, pe-star or iterate:S")


def fit_loadings(x: np.ndarray, ranks: Sequence[int], estimator: str = "pe", *,
                 tol: float = 1e-6, cap: int = STAR_CAP):
    """Dispatch on an estimator tag; returns ``(loadings, eigenvalues, method, iterations)``."""
    kind, steps = parse_estimator(estimator)
    x, ranks = _validate(x, ranks)
    if kind == "ie":
        return (*_initial(x, ranks), "initial", 1)
    _check_projectable(x.shape[0], ranks)
    if kind == "pe":
        return (*_project(x, ranks, _initial(x, ranks)[0]), "projected", 2)
    if kind == "pe-star":
        return (*_star(x, ranks, cap), "projected-star", 2)
    (loadings, vals), used = _iterate(x, ranks, steps, tol)
    return loadings, vals, f"iterative({steps})", used


def fit(x: np.ndarray, ranks: Sequence[int], estimator: str = "pe", *, center: bool = False,
        scale: bool = False, tol: float = 1e-6, cap: int = STAR_CAP) -> TfmFit:
    """Estimate loadings with the named estimator, then the factor series.

    ``center`` subtracts the per-entry time mean and ``scale`` divides by the
    per-entry standard deviation (entries with zero spread are left as is).
    Both are off by default since the model assumes zero-mean data.
    """
    x = as_series(x, min_modes=2)
    mean = sd = None
    if center:
        mean = x.mean(axis=0)
        x = x - mean
    if scale:
        sd = x.std(axis=0)
        sd = np.where(sd > 0, sd, 1.0)
        x = x / sd
    loadings, vals, method, used = fit_loadings(x, ranks, estimator, tol=tol, cap=cap)
    return TfmFit(loadings, estimate_factors(x, loadings), vals, method, used, mean, sd)
