"""Monte Carlo benchmarks and rolling validation."""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import BenchmarkError, DomainError
from .estimation import estimate_factors, fit_loadings, loading_path, parse_estimator, reconstruct
from .metrics import common_mse, loading_distance
from .ranks import ie_er, pe_er
from .simulation import generate, get_preset
from .tensor import as_series

__all__ = [
    "BenchmarkReport", "BenchmarkRow", "common_mse", "iteration_profile", "loading_distance",
    "rate_rows", "rate_slope", "rolling_folds", "rolling_validate", "run_benchmark",
]

CSV_COLUMNS = ("setting", "estimator", "mode", "T", "dims", "mean_D", "se_D", "mean_MSE",
               "rank_hit_rate", "reps")

# failed replications tolerated before a report is rejected
MAX_FAILURE_RATE = 0.01


@dataclass(frozen=True)
class BenchmarkRow:
    setting: str
    estimator: str
    mode: int
    T: int
    dims: tuple[int, ...]
    mean_D: float
    se_D: float
    mean_MSE: float
    rank_hit_rate: float
    reps: int

    def as_record(self) -> dict:
        return {
            "setting": self.setting, "estimator": self.estimator, "mode": self.mode, "T": self.T,
            "dims": "x".join(map(str, self.dims)), "mean_D": repr(self.mean_D), "se_D": repr(self.se_D),
            "mean_MSE": repr(self.mean_MSE),
            "rank_hit_rate": "" if math.isnan(self.rank_hit_rate) else repr(self.rank_hit_rate),
            "reps": self.reps,
        }


@dataclass(frozen=True)
class BenchmarkReport:
    setting: str
    estimators: tuple[str, ...]
    replications: int
    rows: tuple[BenchmarkRow, ...]
    failures: int = 0
    # wall-clock seconds per replication, keyed by T; excluded from CSV output
    seconds_per_replication: dict = field(default_factory=dict, compare=False)

    def cell(self, estimator: str, mode: int, T: int) -> BenchmarkRow:
        for row in self.rows:
            if (row.estimator, row.mode, row.T) == (estimator, mode, T):
                return row
        raise KeyError((estimator, mode, T))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in self.rows:
            writer.writerow(row.as_record())
        return buf.getvalue()

    def to_table(self) -> str:
        header = ["estimator", "mode", "T", "dims", "mean_D", "se_D", "mean_MSE", "rank_hit", "reps"]
        body = [[r.estimator, str(r.mode), str(r.T), "x".join(map(str, r.dims)), f"{r.mean_D:.4f}",
                 f"{r.se_D:.4f}", f"{r.mean_MSE:.6f}",
                 "" if math.isnan(r.rank_hit_rate) else f"{r.rank_hit_rate:.3f}", str(r.reps)]
                for r in self.rows]
        widths = [max(len(h), *(len(b[i]) for b in body)) if body else len(h) for i, h in enumerate(header)]
        lines = [f"setting: {self.setting}  replications: {self.replications}  failures: {self.failures}",
                 "  ".join(h.rjust(w) for h, w in zip(header, widths))]
        lines += ["  ".join(c.rjust(w) for c, w in zip(b, widths)) for b in body]
        return "\n".join(lines) + "\n"


def _rank_selector(estimator: str) -> str:
    return "ie-er" if parse_estimator(estimator)[0] == "ie" else "pe-er"


def _one_replication(cfg, estimators, r_max):
    ds = generate(cfg)
    out = {}
    hits = {}
    for est in estimators:
        loadings, *_ = fit_loadings(ds.x, cfg.ranks, est)
        dists = [loading_distance(a, b) for a, b in zip(loadings, ds.true_loadings)]
        s_hat = reconstruct(estimate_factors(ds.x, loadings), loadings)
        hit = math.nan
        if r_max is not None:
            sel = _rank_selector(est)
            if sel not in hits:
                est_ranks = (ie_er if sel == "ie-er" else pe_er)(ds.x, r_max).ranks
                hits[sel] = float(est_ranks == cfg.ranks)
            hit = hits[sel]
        out[est] = (dists, common_mse(s_hat, ds.true_common), hit)
    return out


def _safe_replication(args):
    cfg, estimators, r_max = args
    try:
        return _one_replication(cfg, estimators, r_max)
    except (DomainError, np.linalg.LinAlgError, FloatingPointError, ValueError):
        return None


def _mean_se(values: list[float]) -> tuple[float, float]:
    n = len(values)
    mean = math.fsum(values) / n
    if n < 2:
        return mean, math.nan
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var / n)


def run_benchmark(setting: str, estimators: Sequence[str] = ("ie", "pe"), replications: int = 100,
                  base_seed: int = 0, T_values: Sequence[int] | None = None, r_max: int | None = None,
                  threads: int | None = None, **config_overrides) -> BenchmarkReport:
    """Simulate ``replications`` datasets per sample size and score each estimator.

    Replication ``i`` uses the stream ``(base_seed, i)`` for every ``T``, so
    sample sizes share common random numbers.  Results are aggregated in
    replication order with exact summation, which makes the report independent
    of ``threads``.  When ``r_max`` is given, the rank selector paired with
    each estimator (``ie-er`` for ``ie``, ``pe-er`` otherwise) is scored too.
    """
    if replications < 1:
        raise DomainError("replications must be at least 1")
    estimators = tuple(estimators)
    for est in estimators:
        parse_estimator(est)
    preset = get_preset(setting)
    T_values = tuple(T_values) if T_values else preset.T_values
    rows, failures, timings = [], 0, {}
    for T in T_values:
        base = replace(preset.config(T, base_seed), **config_overrides)
        jobs = [(replace(base, replication_id=i), estimators, r_max) for i in range(replications)]
        start = time.perf_counter()
        if threads is not None and threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(_safe_replication, jobs))
        else:
            results = [_safe_replication(job) for job in jobs]
        timings[T] = (time.perf_counter() - start) / replications
        ok = [r for r in results if r is not None]
        failed = len(results) - len(ok)
        failures += failed
        if failed > MAX_FAILURE_RATE * replications:
            raise BenchmarkError(f"{failed} of {replications} replications failed at T={T}")
        for est in estimators:
            mse = math.fsum(r[est][1] for r in ok) / len(ok)
            hit = math.nan if r_max is None else math.fsum(r[est][2] for r in ok) / len(ok)
            for k in range(len(base.shape)):
                mean_d, se_d = _mean_se([r[est][0][k] for r in ok])
                rows.append(BenchmarkRow(preset.name, est, k + 1, T, base.shape, mean_d, se_d, mse, hit, len(ok)))
    return BenchmarkReport(preset.name, estimators, replications, tuple(rows), failures, timings)


def rate_rows(report: BenchmarkReport, mode: int = 1, estimator: str | None = None) -> list[tuple]:
    """``(estimator, T, log sqrt(T p_-k), log mean_D)`` for each benchmark cell of ``mode``."""
    out = []
    for row in report.rows:
        if row.mode != mode or (estimator is not None and row.estimator != estimator):
            continue
        p_minus = math.prod(row.dims) // row.dims[mode - 1]
        out.append((row.estimator, row.T, math.log(math.sqrt(row.T * p_minus)), math.log(row.mean_D)))
    return out


def rate_slope(rows: Sequence[tuple]) -> float:
    """Least-squares slope of log mean D against log sqrt(T p_-k)."""
    xs = np.array([r[2] for r in rows])
    ys = np.array([r[3] for r in rows])
    return float(np.polyfit(xs, ys, 1)[0])


def iteration_profile(setting: str, T: int, steps: int = 10, replications: int = 50,
                      base_seed: int = 0) -> np.ndarray:
    """Mean loading distance per (step, mode) of the iterated projection, steps 0..S."""
    preset = get_preset(setting)
    total = np.zeros((steps + 1, len(preset.shape)))
    for i in range(replications):
        ds = generate(preset.config(T, base_seed, i))
        for s, (loadings, _) in enumerate(loading_path(ds.x, preset.ranks, steps)):
            total[s] += [loading_distance(a, b) for a, b in zip(loadings, ds.true_loadings)]
    return total / replications


def rolling_folds(T: int, window: int, period: int) -> list[tuple[slice, slice]]:
    """``(train, test)`` slices: train on ``window`` periods, test on the next one."""
    if window < 1 or period < 1:
        raise DomainError("window and period must be positive")
    if T < (window + 1) * period:
        raise DomainError(f"series of length {T} is shorter than (window + 1) * period = {(window + 1) * period}")
    return [(slice((f - window) * period, f * period), slice(f * period, (f + 1) * period))
            for f in range(window, T // period)]


def rolling_validate(x: np.ndarray, ranks: Sequence[int], window: int, period: int,
                     estimator: str = "pe") -> np.ndarray:
    """Out-of-sample reconstruction MSE for each rolling fold.

    Loadings are fitted on the trailing ``window * period`` slices.  Each
    held-out slice is reconstructed from its own projection onto those
    loadings, ``((1/p) X x_k A_k^T) x_k A_k``.
    """
    x = as_series(x, min_modes=2)
    out = []
    for train, test in rolling_folds(x.shape[0], window, period):
        loadings, *_ = fit_loadings(x[train], ranks, estimator)
        held = x[test]
        out.append(common_mse(reconstruct(estimate_factors(held, loadings), loadings), held))
    return np.array(out)
