"""``rate-lab`` command line entry point.

Exit codes: 0 when the run passes, 2 when it completes but misses its target,
1 on errors (bad config, bad data, estimator failures).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from ..covariance import fit_covariance
from ..csvio import read_samples, write_cov_estimate, write_mean_estimate, write_surface
from ..errors import SpecFDAError
from ..filters import FILTER_NAMES, default_verification_grids, filter_from_name, verify_family
from ..kernels import ProductKernel, kernel_from_name
from ..mean import fit_mean
from ..numerics import trapezoid_grid
from .config import load_config
from .experiments import (diagonal_exclusion_check, fit_slope, phase_transition_scan, run_rate,
                          saturation_compare)
from .report import dumps, write_json, write_report

log = logging.getLogger("rate_lab")

EXIT_PASS, EXIT_ERROR, EXIT_FAIL = 0, 1, 2


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rate-lab", description="Rate experiments for "
                                "spectrally regularized functional mean and covariance fits.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress per cell")
    sub = p.add_subparsers(dest="command", metavar="COMMAND")

    for name, help_ in (("run-rate", "Monte Carlo rate sweep over the configured (n, m) cells"),
                        ("phase-scan", "slopes against n with m = ceil(n^gamma)"),
                        ("saturation", "paired comparison of two filters on identical seeds"),
                        ("diagonal-check", "effect of noise and of keeping j == k pairs")):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", required=True, help="key = value experiment file")
        s.add_argument("--out", default=None, help="output directory (default: ./out/<command>)")
        s.add_argument("--replications", type=int, default=None, help="override R")
        s.add_argument("--seed", type=int, default=None, help="override the base seed")
        if name == "phase-scan":
            s.add_argument("--gammas", default=None, help="comma separated gamma list")

    f = sub.add_parser("fit-one", help="fit one estimate from a curve_id,t,y CSV")
    f.add_argument("--task", choices=("mean", "covariance"), default="mean")
    f.add_argument("--kernel", default="brownian")
    f.add_argument("--filter", default="tikhonov", choices=FILTER_NAMES)
    f.add_argument("--lambda", dest="lam", type=float, required=True)
    f.add_argument("--eta", type=float, default=None,
                   help="mean regularization for covariance centering (default: lambda)")
    f.add_argument("--form", choices=("operator", "kwk"), default="operator")
    f.add_argument("--data", required=True)
    f.add_argument("--out", required=True, help="coefficient CSV")
    f.add_argument("--surface", default=None, help="also write the fit on a grid (s,t,value)")
    f.add_argument("--grid-nodes", type=int, default=65)

    sub.add_parser("verify-filters", help="check the four families on a log grid")
    sub.add_parser("selftest", help="fast end-to-end smoke check")
    return p


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command is None:
        parser.print_help()
        return EXIT_ERROR
    try:
        return _COMMANDS[args.command](args)
    except (SpecFDAError, OSError) as exc:
        print(f"rate-lab: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def _load(args):
    cfg = load_config(args.config)
    changes = {}
    if args.replications is not None:
        changes["replications"] = args.replications
    if args.seed is not None:
        changes["seed"] = args.seed
    if getattr(args, "gammas", None):
        changes["gammas"] = [float(g) for g in args.gammas.split(",")]
    return cfg.replace(**changes) if changes else cfg


def _outdir(args) -> Path:
    return Path(args.out) if args.out else Path("out") / args.command


def _finish(report, args) -> int:
    paths = write_report(_outdir(args), report)
    if report.slope is not None:
        print(f"slope {report.slope.slope:.4f} (target {report.target:.4f}, "
              f"tolerance {report.tolerance:g}, R^2 {report.slope.r2:.3f})")
    print(f"{'PASS' if report.passed else 'FAIL'}: report written to {paths['report']}")
    return EXIT_PASS if report.passed else EXIT_FAIL


def _cmd_run_rate(args) -> int:
    return _finish(run_rate(_load(args)), args)


def _cmd_phase(args) -> int:
    report = phase_transition_scan(_load(args))
    for row in report.extra["gammas"]:
        slope = "n/a" if row["slope"] is None else f"{row['slope']:.4f}"
        print(f"gamma={row['gamma']:g} ({row['regime']}): slope {slope}, "
              f"target {row['target']:.4f}")
    return _finish(report, args)


def _cmd_saturation(args) -> int:
    report = saturation_compare(_load(args))
    sa, sb = report.extra["slopes"]
    fa, fb = report.extra["filters"]
    print(f"slopes {fa}={sa} {fb}={sb}; largest-cell win fraction "
          f"{report.extra['largest_cell_win_fraction']:.2f}")
    return _finish(report, args)


def _cmd_diagonal(args) -> int:
    result = diagonal_exclusion_check(_load(args))
    out = _outdir(args)
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "report.json", result)
    print(f"relative change {result['relative_change']:.3f}, "
          f"band inflation {result['band_inflation']:.2f}")
    print(f"{'PASS' if result['passed'] else 'FAIL'}: report written to {out / 'report.json'}")
    return EXIT_PASS if result["passed"] else EXIT_FAIL


def _cmd_fit_one(args) -> int:
    samples = read_samples(args.data)
    kernel = kernel_from_name(args.kernel)
    filt = filter_from_name(args.filter)
    mean, _ = fit_mean(samples, kernel, filt, args.eta or args.lam, form=args.form,
                       diagnostics=False)
    grid = trapezoid_grid(args.grid_nodes)
    if args.task == "mean":
        est = mean if args.eta is None else fit_mean(samples, kernel, filt, args.lam,
                                                     form=args.form, diagnostics=False)[0]
        write_mean_estimate(est, args.out)
        if args.surface:
            vals = est.evaluate(grid)
            Path(args.surface).write_text(
                "t,mu_hat\n" + "".join(f"{t!r},{v!r}\n" for t, v in zip(grid.nodes, vals)),
                encoding="utf-8")
    else:
        est = fit_covariance(samples, mean, ProductKernel(kernel), filt, args.lam,
                             eta=args.eta or args.lam, form=args.form)
        write_cov_estimate(est, args.out)
        if args.surface:
            write_surface(grid.nodes, est.evaluate(grid), args.surface)
    print(f"wrote {args.out}")
    return EXIT_PASS


def _cmd_verify(args) -> int:
    lam, sig = default_verification_grids()
    ok = True
    for name in FILTER_NAMES:
        rep = verify_family(filter_from_name(name), lam, sig)
        ok &= rep.passed
        d = rep.to_dict()
        for key in ("lambda_grid", "sigma_grid"):
            d.pop(key)
        sys.stdout.write(dumps(d))
    return EXIT_PASS if ok else EXIT_FAIL


def _cmd_selftest(args) -> int:
    from ..synthetic import draw
    from .config import ExperimentConfig
    checks = {}
    pts = [(x, 2.0 * x**-0.5) for x in (10.0, 100.0, 1000.0, 10000.0)]
    checks["slope_fit"] = abs(fit_slope(pts).slope + 0.5) < 1e-12
    lam, sig = default_verification_grids(50, 10)
    checks["filters"] = all(verify_family(filter_from_name(f), lam, sig).passed
                            for f in FILTER_NAMES)
    cfg = ExperimentConfig(xi_rule="none", sigma0=0.0, n=[20], m=[20], replications=1,
                           filter="tikhonov")
    data = draw(cfg.process(), 20, 20, 7)
    est, _ = fit_mean(data.samples, cfg.kernel1(), cfg.main_filter(), 1e-6, solver="direct",
                      diagnostics=False)
    g = cfg.grid()
    truth = cfg.process().true_mean(g.nodes)
    checks["noiseless_mean"] = float(np.max(np.abs(est.evaluate(g) - truth))) < 5e-2
    for k, v in checks.items():
        print(f"{'PASS' if v else 'FAIL'} {k}")
    return EXIT_PASS if all(checks.values()) else EXIT_FAIL


_COMMANDS = {
    "run-rate": _cmd_run_rate,
    "phase-scan": _cmd_phase,
    "saturation": _cmd_saturation,
    "diagonal-check": _cmd_diagonal,
    "fit-one": _cmd_fit_one,
    "verify-filters": _cmd_verify,
    "selftest": _cmd_selftest,
}


if __name__ == "__main__":
    sys.exit(main())
