"""Command-line entry point: ``cshlab {prepare,run,sweep,verify,report}``.

Exit codes: 0 success, 1 run failure, 2 configuration error, 3 baseline
mismatch.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import checkpoint
from .errors import BaselineError, ConfigError, CshLabError
from .gauge import constraint_residuals
from .csh import relativistic_density
from .harness import (
    SweepConfig,
    fit_sweep,
    load_report,
    make_baseline,
    run_label,
    run_pair,
    run_sweep,
    verify_baselines,
)
from .initdata import prepare, prepared_rate_report
from .observables import records_to_csv

EXIT_OK, EXIT_RUN, EXIT_CONFIG, EXIT_BASELINE = 0, 1, 2, 3


def _load_config(args) -> SweepConfig:
    return SweepConfig.from_yaml(args.config) if args.config else SweepConfig()


def _out(args, cfg) -> Path:
    out = Path(args.out or cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_prepare(args) -> int:
    cfg = _load_config(args)
    out = _out(args, cfg)
    grid, profile = cfg.grid(), cfg.profile_obj()
    rows = []
    for eps in cfg.eps:
        params = cfg.params(eps)
        pd = prepare(grid, profile, params, tol=cfg.prepare_tol, max_iter=cfg.prepare_max_iter)
        rdir = out / run_label(eps)
        rdir.mkdir(exist_ok=True)
        checkpoint.save(rdir / "csh0.chk", grid, pd.csh0)
        checkpoint.save(rdir / "euler0.chk", grid, pd.euler0)
        src = abs(pd.csh0.psi) ** 2 - relativistic_density(pd.csh0.psi, pd.csh0.chi, params)
        row = {
            "eps": eps,
            "H0": pd.achieved_H0,
            "H0_terms": pd.H0_terms,
            "declared_lambda": pd.declared_lambda,
            "fixed_point_iterations": pd.fixed_point.iterations,
            "constraints": constraint_residuals(grid, pd.gauge0, src, params.eps_delta),
        }
        rows.append(row)
        print(f"{run_label(eps)}: H0={pd.achieved_H0:.6e} iterations={pd.fixed_point.iterations}")
    result = {"prepared": rows}
    if len(cfg.eps) >= 4:
        fit = prepared_rate_report(grid, profile, cfg.params(cfg.eps[0]), cfg.eps)
        result["lambda_fit"] = fit.to_dict()
        print(f"measured lambda {fit.slope:.4f} (construction predicts {fit.theory:g}), r2={fit.r2:.4f}")
    (out / "prepared.json").write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _load_config(args)
    out = _out(args, cfg)
    eps = args.eps if args.eps is not None else cfg.eps[0]
    res = run_pair(cfg, eps)
    rdir = out / run_label(eps)
    rdir.mkdir(exist_ok=True)
    (rdir / "diag.csv").write_text(records_to_csv(res.records), newline="")
    summary = res.summary()
    (rdir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(f"{run_label(eps)}: status={res.status} records={len(res.records)} dt={res.dt:.4g}")
    if res.status != "ok":
        print(f"run failed: {res.message}", file=sys.stderr)
        return EXIT_RUN
    print(f"energy drift {summary['energy_drift_max']:.3e}, sup H {summary['H_sup']:.6e}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    out = _out(args, cfg)
    report = run_sweep(cfg, out, threads=args.threads)
    _print_report(report)
    return EXIT_RUN if report["failed_runs"] else EXIT_OK


def _print_report(report) -> None:
    for s in report["runs"]:
        extra = f" sup H={s['H_sup']:.4e} drift={s['energy_drift_max']:.2e}" if "H_sup" in s else ""
        print(f"{s['label']}: {s['status']}{extra}")
    fits = report["fits"]
    if not fits:
        print("fewer than 3 successful runs: no rate fits")
    for name, f in fits.items():
        if "slope" in f:
            print(f"{name:22s} slope {f['slope']:7.4f}  theory {f['theory']:6.3f}  r2 {f['r2']:.4f}  C {f['constant']:.4g}")
        else:
            print(f"{name:22s} {f['error']}")


def cmd_verify(args) -> int:
    if not args.out:
        raise ConfigError("verify needs --out <sweep dir>")
    if not args.baseline:
        raise ConfigError("verify needs --baseline <path>")
    report = load_report(args.out)
    checks = verify_baselines(report, args.baseline)
    for c in checks:
        print(c.line())
    return EXIT_OK if all(c.ok for c in checks) else EXIT_BASELINE


def cmd_report(args) -> int:
    if not args.out:
        raise ConfigError("report needs --out <sweep dir>")
    report = load_report(args.out)
    if args.refit:
        cfg = SweepConfig.from_dict(report["config"])
        report["fits"] = fit_sweep(cfg, report["runs"])
    _print_report(report)
    if args.write_baseline:
        Path(args.write_baseline).write_text(json.dumps(make_baseline(report), indent=2, sort_keys=True) + "\n")
        print(f"baseline written to {args.write_baseline}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cshlab", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="verb", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", help="YAML sweep config (defaults used when omitted)")
        p.add_argument("--out", help="output directory")
        return p

    p = common(sub.add_parser("prepare", help="build well-prepared data and measure lambda"))
    p.set_defaults(func=cmd_prepare)
    p = common(sub.add_parser("run", help="one paired CSH/Euler run"))
    p.add_argument("--eps", type=float, help="eps value (default: first entry of the config)")
    p.set_defaults(func=cmd_run)
    p = common(sub.add_parser("sweep", help="paired runs over the eps list plus rate fits"))
    p.add_argument("--threads", type=int, default=1, help="concurrent sweep cells")
    p.set_defaults(func=cmd_sweep)
    p = common(sub.add_parser("verify", help="compare a sweep with a stored baseline"), config=False)
    p.add_argument("--baseline", help="baseline JSON")
    p.set_defaults(func=cmd_verify)
    p = common(sub.add_parser("report", help="print fits of a finished sweep"), config=False)
    p.add_argument("--refit", action="store_true", help="recompute fits from the run summaries")
    p.add_argument("--write-baseline", metavar="PATH", help="store the sweep as a baseline")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "threads", 1) < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except (ConfigError, BaselineError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CshLabError as exc:
        print(f"run failure: {exc}", file=sys.stderr)
        return EXIT_RUN


if __name__ == "__main__":
    sys.exit(main())
