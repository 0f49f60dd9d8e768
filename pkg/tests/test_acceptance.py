"""Exit criteria.  Each test records one PASS/FAIL line, printed in the
terminal summary; run with ``pytest tests/test_acceptance.py -s`` to see
them inline as well."""

import time

import numpy as np
import pytest
from conftest import noiseless_series

from tenfac.estimation import fit, projected_loadings
from tenfac.evaluation import iteration_profile, rate_rows, rate_slope, rolling_validate, run_benchmark
from tenfac.metrics import loading_distance
from tenfac.ranks import ie_er, pe_er
from tenfac.simulation import simulate
from tenfac.tensor import LoadingSet, fold, kron_excluding, multi_mode_product, unfold

RESULTS: list[str] = []
SEED = 2024
REPS = 100


def record(criterion: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def setting_a_t20():
    start = time.perf_counter()
    report = run_benchmark("setting-a", ("ie", "pe"), REPS, base_seed=SEED, T_values=(20,))
    return report, time.perf_counter() - start


@pytest.fixture(scope="module")
def grids():
    return {s: run_benchmark(s, ("ie", "pe"), REPS, base_seed=SEED) for s in ("setting-a", "setting-d")}


def test_1_table1_setting_a(setting_a_t20):
    report, seconds = setting_a_t20
    pe = report.cell("pe", 1, 20).mean_D
    ie = report.cell("ie", 1, 20).mean_D
    ok = 0.032 <= pe <= 0.057 and 0.15 <= ie <= 0.25 and seconds < 120
    record("1 loading accuracy, Setting A T=20", ok,
           f"PE D1={pe:.4f} in [0.032,0.057], IE D1={ie:.4f} in [0.15,0.25], {seconds:.1f}s < 120s")


def test_2_table1_ordering(grids):
    bad = []
    for setting, report in grids.items():
        for T in (20, 50, 100, 200):
            for mode in (1, 2, 3):
                pe, ie = report.cell("pe", mode, T).mean_D, report.cell("ie", mode, T).mean_D
                if not pe < ie:
                    bad.append((setting, T, mode, pe, ie))
    ratios = [grids[s].cell("ie", 1, 200).mean_D / grids[s].cell("pe", 1, 200).mean_D for s in grids]
    record("2 PE beats IE, Settings A and D", not bad,
           f"PE < IE in all 24 cells; IE/PE at T=200 mode 1: A {ratios[0]:.1f}x, D {ratios[1]:.1f}x; violations={bad}")


def test_3_table1_unbalanced():
    report = run_benchmark("setting-b", ("ie", "pe"), REPS, base_seed=SEED, T_values=(100,))
    pe1, ie1 = report.cell("pe", 1, 100).mean_D, report.cell("ie", 1, 100).mean_D
    pe2, ie2 = report.cell("pe", 2, 100).mean_D, report.cell("ie", 2, 100).mean_D
    close = max(pe1, ie1) / min(pe1, ie1) <= 1.25
    gain = ie2 / pe2
    record("3 unbalanced Setting B T=100", close and gain >= 5,
           f"D1 PE={pe1:.4f} IE={ie1:.4f} (ratio {max(pe1, ie1) / min(pe1, ie1):.3f} <= 1.25); "
           f"D2 IE/PE={gain:.1f} >= 5")


def test_4_figure1_rate():
    report = run_benchmark("setting-f", ("pe",), 50, base_seed=SEED, T_values=(16, 64, 256, 1024))
    slope = rate_slope(rate_rows(report, mode=1, estimator="pe"))
    record("4 convergence rate, Setting F", -1.25 <= slope <= -0.75, f"slope of log D(A_1) vs log sqrt(T p^2) = {slope:.3f}")


def test_5_table2_mse(setting_a_t20):
    report, _ = setting_a_t20
    mse = report.cell("pe", 1, 20).mean_MSE
    record("5 common-component MSE, Setting A T=20", 0.022 <= mse <= 0.045, f"PE common-component MSE={mse:.5f} in [0.022,0.045]")


def _hit_rates(setting, T, reps=REPS):
    ie = pe = 0
    for i in range(reps):
        x = simulate(setting, T=T, seed=SEED, replication_id=i).x
        ie += ie_er(x, 8).ranks == (3, 3, 3)
        pe += pe_er(x, 8).ranks == (3, 3, 3)
    return ie / reps, pe / reps


def test_6_table3_rank_selection():
    cells = {(s, T): _hit_rates(s, T) for s, T in [("setting-a", 20), ("setting-c", 50), ("setting-d", 200)]}
    ok = cells["setting-d", 200][1] >= 0.97 and cells["setting-a", 20][1] >= 0.25
    ok = ok and all(pe >= ie for ie, pe in cells.values())
    detail = "; ".join(f"{s} T={T}: PE-ER={pe:.2f} IE-ER={ie:.2f}" for (s, T), (ie, pe) in cells.items())
    record("6 rank recovery", ok, detail + " (need D>=0.97, A>=0.25, PE>=IE)")


def test_7_figure2_plateau():
    prof = iteration_profile("setting-b", 100, steps=10, replications=50, base_seed=SEED)
    d2 = prof[:, 1]
    flat = abs(d2[10] / d2[1] - 1) <= 0.10
    gain = d2[0] / d2[1]
    record("7 iteration plateau, Setting B", flat and gain >= 5,
           f"D(A_2): step0={d2[0]:.4f} step1={d2[1]:.4f} step10={d2[10]:.4f}; "
           f"|step10/step1-1|={abs(d2[10] / d2[1] - 1):.3f} <= 0.10, step0/step1={gain:.1f} >= 5")


def test_8_property_suite():
    rng = np.random.default_rng(SEED)
    failures = []

    for _ in range(1000):
        K = int(rng.integers(1, 5))
        shape = tuple(int(v) for v in rng.integers(1, 6, size=K))
        x = rng.standard_normal(shape)
        k = int(rng.integers(0, K))
        if not np.array_equal(fold(unfold(x, k), k, shape), x):
            failures.append(f"round-trip {shape} mode {k}")

    worst = 0.0
    for K in (2, 3, 4):
        for _ in range(10):
            ranks = tuple(int(v) for v in rng.integers(1, 4, size=K))
            dims = tuple(r + int(rng.integers(0, 3)) for r in ranks)
            f = rng.standard_normal(ranks)
            a = [rng.standard_normal((p, r)) for p, r in zip(dims, ranks)]
            x = multi_mode_product(f, a)
            for k in range(K):
                resid = np.linalg.norm(unfold(x, k) - a[k] @ unfold(f, k) @ kron_excluding(a, k).T)
                worst = max(worst, resid / max(1.0, np.linalg.norm(x)))
    if worst >= 1e-10:
        failures.append(f"kronecker residual {worst:.2e}")

    x, truth, _ = noiseless_series(rng, (6, 5, 4), (2, 2, 2), T=15, weights=[(2, 1)] * 3)
    worst_d = max(loading_distance(a, b) for est in ("ie", "pe", "pe-star", "iterate:5")
                  for a, b in zip(fit(x, (2, 2, 2), est).loadings, truth))
    if worst_d >= 1e-8:
        failures.append(f"noiseless D {worst_d:.2e}")

    ds = simulate("setting-a", T=50, seed=SEED)
    rots = [np.linalg.qr(rng.standard_normal((3, 3)))[0] for _ in range(3)]
    rotated = LoadingSet(tuple(a @ o for a, o in zip(ds.true_loadings, rots)))
    est = projected_loadings(ds.x, (3, 3, 3))
    rot_gap = max(abs(loading_distance(e, r) - loading_distance(e, a))
                  for e, a, r in zip(est, ds.true_loadings, rotated))
    if rot_gap >= 1e-10:
        failures.append(f"rotation gap {rot_gap:.2e}")

    for i in range(10):
        xs = simulate("setting-a", T=20, seed=SEED, replication_id=i).x
        if ie_er(xs, 8).ranks != ie_er(7.3 * xs, 8).ranks or pe_er(xs, 8).ranks != pe_er(7.3 * xs, 8).ranks:
            failures.append(f"scale invariance rep {i}")

    one = run_benchmark("setting-a", ("ie", "pe"), 8, base_seed=SEED, T_values=(20,), r_max=8, threads=1)
    many = run_benchmark("setting-a", ("ie", "pe"), 8, base_seed=SEED, T_values=(20,), r_max=8, threads=4)
    if one.to_csv() != many.to_csv():
        failures.append("benchmark determinism")

    record("8 property suite", not failures,
           f"1000 round-trips, kron residual {worst:.1e}, noiseless D {worst_d:.1e}, rotation gap {rot_gap:.1e}, "
           f"scale invariance, thread determinism; failures={failures}")


def test_9_rolling_validation():
    rng = np.random.default_rng(SEED)
    x, _, _ = noiseless_series(rng, (10, 10, 10), (3, 3, 3), T=60, weights=[(3, 2, 1)] * 3)
    exact = max(rolling_validate(x, (3, 3, 3), 2, 12, est).max() for est in ("ie", "pe"))
    noisy = simulate("setting-a", T=60, seed=SEED).x
    ie = rolling_validate(noisy, (3, 3, 3), 2, 12, "ie")
    pe = rolling_validate(noisy, (3, 3, 3), 2, 12, "pe")
    record("9 rolling validation", exact < 1e-10 and pe.mean() <= ie.mean(),
           f"noiseless max fold MSE={exact:.1e} < 1e-10; noisy mean fold MSE PE={pe.mean():.4f} <= IE={ie.mean():.4f}")
