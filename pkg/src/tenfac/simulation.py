"""Seeded simulation of tensor factor model series.

Loadings have i.i.d. Uniform(-1, 1) entries.  The vectorized factors and
noise follow AR(1) recursions normalized to unit stationary variance and
are started at their stationary distribution (no burn-in).  Noise
innovations are tensor normal with per-mode covariance ``Sigma_k`` equal to
1 on the diagonal and ``1/p_k`` off it.

Random numbers come from numpy's PCG64 generator.  Replication ``i`` of a
run with seed ``s`` draws from ``SeedSequence(s, spawn_key=(i,))``, so every
replication has an independent stream that does not depend on scheduling.
Draw order within a replication: loadings (mode 1 first), factor
innovations, noise innovations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import DomainError
from .tensor import LoadingSet, multi_mode_product


@dataclass(frozen=True)
class DgpConfig:
    shape: tuple[int, ...]
    ranks: tuple[int, ...]
    T: int
    phi: float = 0.1
    psi: float = 0.1
    seed: int = 0
    replication_id: int = 0
    noise_scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "shape", tuple(int(p) for p in self.shape))
        object.__setattr__(self, "ranks", tuple(int(r) for r in self.ranks))
        if not abs(self.phi) < 1:
            raise DomainError(f"factor AR coefficient phi={self.phi} must satisfy |phi| < 1")
        if not abs(self.psi) < 1:
            raise DomainError(f"noise AR coefficient psi={self.psi} must satisfy |psi| < 1")
        if len(self.shape) != len(self.ranks) or not self.shape:
            raise DomainError("shape and ranks must be non-empty and of equal length")
        if any(not 1 <= r <= p for r, p in zip(self.ranks, self.shape)):
            raise DomainError(f"ranks {self.ranks} must satisfy 1 <= r_k <= p_k for shape {self.shape}")
        if self.T < 1:
            raise DomainError("T must be positive")
        if self.noise_scale < 0:
            raise DomainError("noise_scale must be non-negative")
        if self.seed < 0 or self.replication_id < 0:
            raise DomainError("seed and replication_id must be non-negative")


@dataclass(frozen=True)
class Preset:
    name: str
    shape: tuple[int, ...]
    T_values: tuple[int, ...]
    phi: float = 0.1
    psi: float = 0.1
    ranks: tuple[int, ...] = (3, 3, 3)

    def config(self, T: int | None = None, seed: int = 0, replication_id: int = 0) -> DgpConfig:
        return DgpConfig(self.shape, self.ranks, self.T_values[0] if T is None else T,
                         self.phi, self.psi, seed, replication_id)


PRESETS = {
    "setting-a": Preset("setting-a", (10, 10, 10), (20, 50, 100, 200)),
    "setting-b": Preset("setting-b", (100, 10, 10), (20, 50, 100, 200)),
    "setting-c": Preset("setting-c", (15, 15, 15), (20, 50, 100, 200)),
    "setting-d": Preset("setting-d", (20, 20, 20), (20, 50, 100, 200)),
    "setting-e": Preset("setting-e", (30, 30, 30), (20, 50, 100, 200)),
    "setting-f": Preset("setting-f", (40, 10, 10), (16, 32, 64, 128, 256, 512, 1024)),
}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name.lower()]
    except KeyError:
        raise DomainError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None


@dataclass(frozen=True)
class SimulatedDataset:
    x: np.ndarray
    true_loadings: LoadingSet
    true_factors: np.ndarray
    true_common: np.ndarray
    noise: np.ndarray


def make_rng(seed: int, replication_id: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(replication_id,))))


def equicorrelation(p: int) -> np.ndarray:
    """``p x p`` matrix with unit diagonal and ``1/p`` elsewhere."""
    return np.full((p, p), 1.0 / p) + (1.0 - 1.0 / p) * np.eye(p)


def _cholesky_factors(sigmas: Sequence[np.ndarray]) -> list[np.ndarray]:
    out = []
    for s in sigmas:
        s = np.asarray(s, dtype=np.float64)
        if s.ndim != 2 or s.shape[0] != s.shape[1] or not np.allclose(s, s.T):
            raise DomainError("covariance matrices must be square and symmetric")
        try:
            out.append(np.linalg.cholesky(s))
        except np.linalg.LinAlgError:
            raise DomainError("covariance matrix is not positive definite") from None
    return out


def tensor_normal_sample(shape: Sequence[int], sigmas: Sequence[np.ndarray], rng: np.random.Generator,
                         size: int | None = None) -> np.ndarray:
    """Zero-mean tensor normal draw with ``Cov(vec U) = Sigma_K kron ... kron Sigma_1``.

    Computed as ``Z x_1 L_1 ... x_K L_K`` with ``L_k`` the Cholesky factor
    of ``Sigma_k``.  With ``size`` the result has a leading axis of draws.
    """
    shape = tuple(int(p) for p in shape)
    if len(sigmas) != len(shape) or any(np.shape(s) != (p, p) for s, p in zip(sigmas, shape)):
        raise DomainError("one p_k x p_k covariance per mode is required")
    chol = _cholesky_factors(sigmas)
    if size is None:
        return multi_mode_product(rng.standard_normal(shape), chol)
    return multi_mode_product(rng.standard_normal((size,) + shape), chol, offset=1)


def _ar1(innovations: np.ndarray, coef: float) -> np.ndarray:
    # stationary start: the first state is the first innovation itself
    out = np.empty_like(innovations)
    out[0] = innovations[0]
    gain = math.sqrt(1.0 - coef * coef)
    for t in range(1, len(out)):
        out[t] = coef * out[t - 1] + gain * innovations[t]
    return out


def generate(config: DgpConfig) -> SimulatedDataset:
    rng = make_rng(config.seed, config.replication_id)
    loadings = LoadingSet(tuple(rng.uniform(-1.0, 1.0, size=(p, r)) for p, r in zip(config.shape, config.ranks)))
    factors = _ar1(rng.standard_normal((config.T,) + config.ranks), config.phi)
    sigmas = [equicorrelation(p) for p in config.shape]
    noise = _ar1(tensor_normal_sample(config.shape, sigmas, rng, size=config.T), config.psi)
    if config.noise_scale != 1.0:
        noise = config.noise_scale * noise
    common = multi_mode_product(factors, list(loadings), offset=1)
    return SimulatedDataset(common + noise, loadings, factors, common, noise)


def simulate(preset: str, T: int | None = None, seed: int = 0, replication_id: int = 0, **overrides) -> SimulatedDataset:
    """Generate one replication of a named preset; keyword overrides replace config fields."""
    cfg = get_preset(preset).config(T, seed, replication_id)
    if overrides:
        cfg = replace(cfg, **overrides)
    return generate(cfg)
