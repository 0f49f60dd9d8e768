"""Command-line entry point: ``tenfac {simulate,estimate,rank,benchmark,rolling}``.

Exit status is 0 on success, 2 for usage or validation errors and 1 for
runtime failures (I/O, resource caps, failed benchmarks).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import io as tio
from .errors import DomainError
from .estimation import STAR_CAP, fit
from .evaluation import rate_rows, rolling_folds, rolling_validate, run_benchmark
from .metrics import loading_distance
from .ranks import C_RULES, ie_er, pe_er
from .simulation import DgpConfig, generate, get_preset


def _ints(text: str) -> tuple[int, ...]:
    try:
        vals = tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty integer list")
    return vals


def _names(text: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in text.split(",") if v.strip())


def _stem(path: str | Path) -> Path:
    path = Path(path)
    return path.with_suffix("") if path.suffix else path


def truth_paths(stem: Path, K: int) -> dict:
    return {
        "loadings": [Path(f"{stem}.A{k + 1}.csv") for k in range(K)],
        "factors": Path(f"{stem}.factors.tsr"),
        "common": Path(f"{stem}.common.tsr"),
    }


def _emit(payload: dict, path: str | None = None) -> None:
    text = json.dumps(payload, indent=2) + "\n"
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _threads(flag: int | None) -> int:
    env = os.environ.get("TENFAC_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise DomainError(f"TENFAC_THREADS must be an integer, got {env!r}") from None
    return flag if flag is not None else (os.cpu_count() or 1)


def cmd_simulate(args) -> int:
    if args.preset:
        preset = get_preset(args.preset)
        shape, ranks = args.dims or preset.shape, args.ranks or preset.ranks
        T = args.T or preset.T_values[0]
        phi = preset.phi if args.phi is None else args.phi
        psi = preset.psi if args.psi is None else args.psi
    else:
        if not (args.dims and args.ranks and args.T):
            raise DomainError("without --preset, --dims, --ranks and --T are required")
        shape, ranks, T = args.dims, args.ranks, args.T
        phi = 0.1 if args.phi is None else args.phi
        psi = 0.1 if args.psi is None else args.psi
    cfg = DgpConfig(shape, ranks, T, phi, psi, args.seed, args.replication)
    ds = generate(cfg)
    out = Path(args.output)
    if out.suffix.lower() == ".csv":
        tio.write_series_csv(out, ds.x)
    else:
        tio.write_tsr(out, ds.x)
    meta = {"path": str(out), "shape": list(cfg.shape), "T": cfg.T, "ranks": list(cfg.ranks),
            "phi": cfg.phi, "psi": cfg.psi, "seed": cfg.seed, "replication": cfg.replication_id,
            "preset": args.preset}
    if args.truth:
        paths = truth_paths(_stem(out), len(cfg.shape))
        for p, a in zip(paths["loadings"], ds.true_loadings):
            tio.write_matrix_csv(p, a)
        tio.write_tsr(paths["factors"], ds.true_factors)
        tio.write_tsr(paths["common"], ds.true_common)
        meta["truth"] = [str(p) for p in paths["loadings"]] + [str(paths["factors"]), str(paths["common"])]
    _emit(meta)
    return 0


def _select_ranks(x, args):
    if args.rank_method == "ie-er":
        return ie_er(x, args.r_max, c=args.c, rule=args.rule)
    return pe_er(x, args.r_max, args.max_sweeps, c=args.c, rule=args.rule,
                 update_from_projected=args.update_from_projected)


def _rank_payload(est, method: str) -> dict:
    return {"method": method, "ranks": list(est.ranks),
            "ratio_traces": [t.tolist() for t in est.ratio_traces],
            "iterations": est.iterations, "converged": est.converged}


def cmd_estimate(args) -> int:
    x = tio.read_series(args.input, args.shape)
    start = time.perf_counter()
    report: dict = {"input": str(args.input), "shape": list(x.shape[1:]), "T": x.shape[0]}
    if args.auto_rank:
        sel = _select_ranks(x, args)
        ranks = sel.ranks
        report["rank_selection"] = _rank_payload(sel, args.rank_method)
    else:
        ranks = args.ranks
    model = fit(x, ranks, args.estimator, center=args.center, scale=args.scale, tol=args.tol, cap=args.cap)
    elapsed = time.perf_counter() - start
    prefix = Path(args.output)
    for k, a in enumerate(model.loadings):
        tio.write_matrix_csv(f"{prefix}.A{k + 1}.csv", a)
    tio.write_tsr(f"{prefix}.factors.tsr", model.factors)
    report.update({"estimator": args.estimator, "method": model.method, "ranks": list(model.ranks),
                   "eigenvalues": [v.tolist() for v in model.eigenvalues],
                   "iterations": model.iterations_used, "center": args.center, "scale": args.scale,
                   "timings": {"seconds": elapsed}})
    if args.report_distance:
        stem = Path(args.truth) if args.truth else _stem(args.input)
        truth = [tio.read_matrix_csv(p) for p in truth_paths(stem, x.ndim - 1)["loadings"]]
        report["distance"] = [loading_distance(a, b) for a, b in zip(model.loadings, truth)]
    _emit(report, f"{prefix}.report.json")
    _emit(report)
    return 0


def cmd_rank(args) -> int:
    x = tio.read_series(args.input, args.shape)
    _emit(_rank_payload(_select_ranks(x, args), args.rank_method), args.output)
    return 0


def cmd_benchmark(args) -> int:
    report = run_benchmark(args.preset, args.estimators, args.reps, args.seed, args.T, args.r_max,
                           threads=_threads(args.threads))
    text = report.to_csv()
    if args.output:
        Path(args.output).write_text(text)
    if args.rate_csv:
        with open(args.rate_csv, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["estimator", "T", "log_sqrt_Tp2", "log_mean_D"])
            for est, T, lx, ly in rate_rows(report, args.rate_mode):
                w.writerow([est, T, repr(lx), repr(ly)])
    if args.table:
        sys.stdout.write(report.to_table())
    elif not args.output:
        sys.stdout.write(text)
    return 0


def cmd_rolling(args) -> int:
    x = tio.read_series(args.input, args.shape)
    folds = rolling_folds(x.shape[0], args.window, args.period)
    rows = []
    for est in args.estimators:
        mses = rolling_validate(x, args.ranks, args.window, args.period, est)
        for i, ((train, test), mse) in enumerate(zip(folds, mses), start=1):
            rows.append([i, est, train.start, train.stop, test.start, test.stop, repr(float(mse))])
    fh = open(args.output, "w", newline="") if args.output else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["fold", "estimator", "train_start", "train_end", "test_start", "test_end", "mse"])
        w.writerows(rows)
    finally:
        if args.output:
            fh.close()
    return 0


def _add_rank_options(p, *aliases: str) -> None:
    p.add_argument("--rank-method", *aliases, dest="rank_method", choices=("pe-er", "ie-er"), default="pe-er")
    p.add_argument("--r-max", type=int, default=8)
    p.add_argument("--max-sweeps", type=int, default=10)
    p.add_argument("--c", type=float, default=None, help="fixed penalty constant")
    p.add_argument("--rule", choices=C_RULES, default="mean", help="automatic penalty constant")
    p.add_argument("--update-from-projected", action="store_true",
                   help="rebuild loadings from the projected covariance between sweeps")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tenfac", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a simulated tensor series")
    p.add_argument("--preset")
    p.add_argument("--dims", type=_ints)
    p.add_argument("--ranks", type=_ints)
    p.add_argument("--T", type=int)
    p.add_argument("--phi", type=float)
    p.add_argument("--psi", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--replication", type=int, default=0)
    p.add_argument("--truth", action="store_true", help="also write true loadings, factors and common components")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="fit loadings and factors")
    p.add_argument("--input", required=True)
    p.add_argument("--shape", type=_ints, help="slice shape, required for CSV input")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--ranks", type=_ints)
    group.add_argument("--auto-rank", action="store_true")
    _add_rank_options(p)
    p.add_argument("--estimator", default="pe", help="ie, pe, pe-star or iterate:S")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--cap", type=int, default=STAR_CAP)
    p.add_argument("--center", action="store_true")
    p.add_argument("--scale", action="store_true")
    p.add_argument("--report-distance", action="store_true")
    p.add_argument("--truth", help="path stem of the truth sidecar files (default: input stem)")
    p.add_argument("-o", "--output", required=True, help="output path prefix")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("rank", help="estimate the number of factors per mode")
    p.add_argument("--input", required=True)
    p.add_argument("--shape", type=_ints)
    _add_rank_options(p, "--method")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("benchmark", help="Monte Carlo comparison of estimators")
    p.add_argument("--preset", required=True)
    p.add_argument("--T", type=_ints)
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--estimators", type=_names, default=("ie", "pe"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int)
    p.add_argument("--r-max", type=int)
    p.add_argument("--rate-csv")
    p.add_argument("--rate-mode", type=int, default=1)
    p.add_argument("--table", action="store_true", help="print an aligned text table")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("rolling", help="rolling-window out-of-sample validation")
    p.add_argument("--input", required=True)
    p.add_argument("--shape", type=_ints)
    p.add_argument("--ranks", type=_ints, required=True)
    p.add_argument("--window", type=int, required=True, help="training periods per fold")
    p.add_argument("--period", type=int, required=True, help="slices per period")
    p.add_argument("--estimators", "--estimator", type=_names, default=("pe",))
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_rolling)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DomainError as exc:
        print(f"tenfac: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, RuntimeError) as exc:
        print(f"tenfac: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
