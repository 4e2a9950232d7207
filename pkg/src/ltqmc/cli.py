"""Command-line entry point: ``ltqmc analyze | price | selftest``.

Exit codes: 0 success, 1 runtime failure, 2 bad configuration.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
import time
from pathlib import Path

from .analysis import contribution_table
from .config import ConfigError, ExperimentConfig, build_config
from .engine import SimulationConfig, build_path, simulate
from .market import build_covariance_factors, drift_vector
from .sampling import GeneratorSpec

log = logging.getLogger("ltqmc")

LABELS = {"cholesky": "Cholesky", "pca": "PCA", "lt1": "LT1", "lt2": "LT2",
          "pseudo": "MC", "lhs": "LHS", "hybrid": "RQMC"}


def _num(x: float, digits: int | None) -> str:
    return repr(float(x)) if digits is None else f"{x:.{digits}f}"


def _write(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def cmd_analyze(cfg: ExperimentConfig, out: Path, rounded: bool = False) -> list[Path]:
    """Write contribution.csv, effdim.csv and timings.csv."""
    pct_digits = 2 if rounded else None
    columns, contrib, effdim, timings = [], [], [], []
    for rho in cfg.correlations:
        market = cfg.market(rho)
        cov = build_covariance_factors(market)
        mu = drift_vector(market)
        label = cfg.correlation_label(rho)
        log.info("analyzing %s case", label)
        reports = contribution_table(mu, cov, cfg.methods, cfg.p_max, cfg.level,
                                     cfg.d_T_bound, cfg.k_star, cfg.timing_repeats)
        for rep in reports:
            name = LABELS[rep.method]
            columns.append(f"{name}_{label}")
            contrib.append(rep.cumulative_pct)
            effdim.append([name, label, rep.d_T_label, _num(rep.level, None), rep.d_T_bound,
                           _num(rep.pct_at_bound, pct_digits)])
            timings.append([name, label, _num(rep.seconds, 2 if rounded else None)])
    p_rows = min(len(c) for c in contrib)
    rows = [[p + 1] + [_num(c[p], pct_digits) for c in contrib] for p in range(p_rows)]
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / "contribution.csv", out / "effdim.csv", out / "timings.csv"]
    _write(paths[0], ["p"] + columns, rows)
    _write(paths[1], ["method", "correlation", "d_T", "level", "bound", "pct_at_bound"], effdim)
    _write(paths[2], ["method", "correlation", "seconds"], timings)
    return paths


def cmd_price(cfg: ExperimentConfig, out: Path, rounded: bool = False) -> Path:
    """Write prices.csv with one row per (correlation, K, method, generator)."""
    rows = []
    for rho in cfg.correlations:
        market = cfg.market(rho)
        label = cfg.correlation_label(rho)
        for method in cfg.methods:
            base = SimulationConfig(market, method, GeneratorSpec(seed=cfg.seed),
                                    cfg.n_per_batch, cfg.batches, cfg.k_star)
            path, build_seconds = build_path(base)
            for kind in cfg.generators:
                gen = GeneratorSpec(kind, min(50, cfg.k_star), cfg.seed, cfg.direction_file,
                                    cfg.sobol_skip)
                sim = SimulationConfig(market, method, gen, cfg.n_per_batch, cfg.batches, cfg.k_star)
                log.info("pricing %s %s %s", label, method, kind)
                results = simulate(sim, cfg.strikes, path=path)
                for K in cfg.strikes:
                    res = results[K]
                    seconds = build_seconds + res.simulation_seconds
                    rows.append([label, f"{K:g}", LABELS[method], LABELS[kind],
                                 _num(res.price, 5 if rounded else None),
                                 _num(res.rmse, 5 if rounded else None),
                                 _num(seconds, 2 if rounded else None)])
    out.mkdir(parents=True, exist_ok=True)
    path = out / "prices.csv"
    _write(path, ["correlation", "K", "method", "generator", "price", "rmse", "seconds"], rows)
    return path


def cmd_selftest(cfg: ExperimentConfig) -> int:
    from .selftest import run_selftest
    t0 = time.perf_counter()
    checks = run_selftest(cfg.direction_file, cfg.tolerance_scale)
    for c in checks:
        status = "PASS" if c.passed else "FAIL"
        print(f"{status} {c.suite}: {c.invariant}" + (f" ({c.detail})" if c.detail else ""))
    failed = [c for c in checks if not c.passed]
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed in "
          f"{time.perf_counter() - t0:.1f} s")
    if failed:
        print("failing suites: " + ", ".join(sorted({c.suite for c in failed})))
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ltqmc", description="QMC pricing and dimension analysis for Asian basket options.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("analyze", "variance contributions, effective dimensions, timings"),
                            ("price", "Asian basket prices and RMSEs"),
                            ("selftest", "small-scale oracle suites")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="key=value configuration file")
        p.add_argument("--out", help="output directory (overrides output.dir)")
        p.add_argument("--seed", type=int)
        p.add_argument("--kstar", type=int)
        p.add_argument("--paper-format", dest="rounded", action="store_true",
                       help="round numbers to the digits printed in the reference tables")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:   # --help exits 0, usage errors count as bad config
        return 0 if not exc.code else 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s")
    overrides = {}
    if args.out:
        overrides["output.dir"] = args.out
    if args.seed is not None:
        overrides["run.seed"] = str(args.seed)
    if args.kstar is not None:
        overrides["lt.k_star"] = str(args.kstar)
    try:
        cfg = build_config(args.config, overrides)
    except (ConfigError, OSError) as exc:
        print(f"ltqmc: configuration error: {exc}", file=sys.stderr)
        return 2
    try:
        if args.command == "selftest":
            return cmd_selftest(cfg)
        out = Path(cfg.out_dir)
        if args.command == "analyze":
            for p in cmd_analyze(cfg, out, args.rounded):
                print(p)
        else:
            print(cmd_price(cfg, out, args.rounded))
    except Exception as exc:
        print(f"ltqmc: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
