"""Monte Carlo cells, slope fits, phase-transition scans and saturation comparisons."""

from __future__ import annotations

import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..covariance import assemble_pairs, fit_covariance
from ..errors import DegenerateCells, SpecFDAError
from ..filters import Filter, filter_from_name
from ..mean import fit_mean, oracle_exponent, oracle_lambda_mean, select_lambda_cv
from ..numerics import l2_norm_grid, l2_norm_grid2
from ..synthetic import draw, true_cov_on_grid, true_mean_on_grid
from .config import ExperimentConfig, _parse_policy

log = logging.getLogger(__name__)

CELL_SEED_STRIDE = 10007


def thread_count(cfg: ExperimentConfig) -> int:
    env = os.environ.get("RATE_LAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            log.warning("ignoring non-integer RATE_LAB_THREADS=%r", env)
    return max(1, cfg.threads)


def cell_seeds(cfg: ExperimentConfig, cell_index: int) -> list[int]:
    base = cfg.seed + CELL_SEED_STRIDE * cell_index
    return [base + r for r in range(cfg.replications)]


def auto_solver(cfg: ExperimentConfig, filt: Filter) -> str:
    if cfg.solver != "auto":
        return cfg.solver
    return {"tikhonov": "direct", "cutoff": "partial"}.get(filt.family, "eigen")


def _regularization(policy: str, n, m, alpha, b, filt: Filter) -> tuple[str, list]:
    kind, args = _parse_policy(policy)
    if kind == "oracle":
        return kind, [oracle_lambda_mean(n, m, alpha, b, filt.qualification)]
    return kind, args


def target_exponent(cfg: ExperimentConfig, filt: Filter | None = None) -> float:
    """Theoretical slope of the nonparametric term against ``log(nm)``."""
    filt = filt or cfg.main_filter()
    if cfg.task == "mean":
        r = min(cfg.alpha, filt.qualification)
        return -r * cfg.b / (1.0 + 2.0 * r * cfg.b)
    r1 = min(cfg.alpha1, filt.qualification)
    return -r1 * cfg.b1 / (1.0 + 2.0 * cfg.alpha1 * cfg.b1)


# ----------------------------------------------------------------------
# one replication


@dataclass
class ReplicationResult:
    error: float
    band_error: float | None = None
    lam: float | None = None
    eta: float | None = None


def band_norm(values: np.ndarray, grid, band: float) -> float:
    """L2 norm restricted to ``|s - t| <= band``."""
    mask = np.abs(grid.nodes[:, None] - grid.nodes[None, :]) <= band
    w = grid.weights
    return float(np.sqrt(np.sum(np.outer(w, w) * mask * values**2)))


def _one_mean(cfg, spec, n, m, seed, filt, grid, truth):
    data = draw(spec, n, m, seed)
    kind, lams = _regularization(cfg.lam, n, data.samples.harmonic_mean if cfg.m_scheme != "constant" else m,
                                 cfg.alpha, cfg.b, filt)
    solver = auto_solver(cfg, filt)
    kernel = cfg.kernel1()
    lam = lams[0] if kind != "gridcv" else select_lambda_cv(
        data.samples, kernel, filt, lams, seed=seed, solver=solver)
    est, _ = fit_mean(data.samples, kernel, filt, lam, solver=solver, diagnostics=False)
    return ReplicationResult(l2_norm_grid(est.evaluate(grid) - truth, grid), lam=lam)


def _one_cov(cfg, spec, n, m, seed, filt, grid2, truth2, include_diagonal=None):
    data = draw(spec, n, m, seed)
    mfilt = cfg.centering_filter()
    m_eff = data.samples.harmonic_mean if cfg.m_scheme != "constant" else m
    _, etas = _regularization(cfg.eta, n, m_eff, cfg.alpha, cfg.b, mfilt)
    _, lams = _regularization(cfg.lam, n, m_eff, cfg.alpha1, cfg.b1, filt)
    kernel = cfg.kernel1()
    if cfg.centering == "true":
        center, eta = spec.true_mean, None
    else:
        center, _ = fit_mean(data.samples, kernel, mfilt, etas[0],
                             solver=auto_solver(cfg, mfilt), diagnostics=False)
        eta = etas[0]
    diag = cfg.include_diagonal if include_diagonal is None else include_diagonal
    design = assemble_pairs(data.samples, center, include_diagonal=diag)
    est = fit_covariance(data.samples, center, cfg.kernel2(), filt, lams[0], eta=eta,
                         solver=auto_solver(cfg, filt), pair_cap=cfg.pair_cap, design=design)
    diff = est.evaluate(grid2) - truth2
    return ReplicationResult(l2_norm_grid2(diff, grid2), band_norm(diff, grid2, cfg.band),
                             lam=lams[0], eta=eta)


# ----------------------------------------------------------------------
# cells


@dataclass
class CellResult:
    n: int
    m: float
    errors: list
    band_errors: list = field(default_factory=list)
    lam: float | None = None
    eta: float | None = None
    failure: str | None = None

    @property
    def nm(self) -> float:
        return self.n * self.m

    @property
    def median(self) -> float:
        return float(np.median(self.errors)) if self.errors else math.nan

    @property
    def iqr(self) -> float:
        if not self.errors:
            return math.nan
        q75, q25 = np.percentile(self.errors, [75, 25])
        return float(q75 - q25)

    @property
    def band_median(self) -> float:
        return float(np.median(self.band_errors)) if self.band_errors else math.nan

    def to_dict(self) -> dict:
        return {
            "n": self.n, "m": self.m, "nm": self.nm,
            "median_err": self.median, "iqr": self.iqr,
            "band_median_err": self.band_median if self.band_errors else None,
            "lambda": self.lam, "eta": self.eta,
            "errors": list(self.errors),
            "failure": self.failure,
        }


def run_cell(cfg: ExperimentConfig, n: int, m: float, seeds, filt: Filter | None = None,
             sigma0: float | None = None, include_diagonal: bool | None = None) -> CellResult:
    """Draw, fit and score one replication per seed; results keep seed order."""
    filt = filt or cfg.main_filter()
    spec = cfg.process(sigma0)
    if cfg.task == "mean":
        grid = cfg.grid()
        truth = true_mean_on_grid(spec, grid)
        job = lambda s: _one_mean(cfg, spec, n, m, s, filt, grid, truth)  # noqa: E731
    else:
        grid2 = cfg.grid2()
        truth2 = true_cov_on_grid(spec, grid2)
        job = lambda s: _one_cov(cfg, spec, n, m, s, filt, grid2, truth2,  # noqa: E731
                                 include_diagonal)
    seeds = list(seeds)
    try:
        workers = thread_count(cfg)
        if workers > 1 and len(seeds) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(job, seeds))
        else:
            results = [job(s) for s in seeds]
    except SpecFDAError as exc:
        log.error("cell n=%s m=%s aborted: %s", n, m, exc)
        return CellResult(n, m, [], failure=f"{type(exc).__name__}: {exc}")
    band = [r.band_error for r in results if r.band_error is not None]
    return CellResult(n, m, [r.error for r in results], band,
                      lam=results[0].lam, eta=results[0].eta)


# ----------------------------------------------------------------------
# slopes


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    r2: float


def fit_slope(cells) -> SlopeFit:
    """OLS of ``log(err)`` on ``log(x)`` for ``(x, err)`` pairs."""
    cells = list(cells)
    if len(cells) < 4:
        raise DegenerateCells(f"need at least 4 cells, got {len(cells)}")
    x = np.array([float(c[0]) for c in cells])
    y = np.array([float(c[1]) for c in cells])
    if np.any(x <= 0) or np.any(y <= 0) or not np.all(np.isfinite(y)):
        raise DegenerateCells("cell sizes and errors must be positive and finite")
    if np.unique(x).size != x.size:
        raise DegenerateCells("cell sizes must be distinct")
    lx, ly = np.log(x), np.log(y)
    A = np.column_stack([lx, np.ones_like(lx)])
    (slope, intercept), *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return SlopeFit(float(slope), float(intercept), r2)


# ----------------------------------------------------------------------
# reports


@dataclass
class RateReport:
    kind: str
    config: dict
    cells: list
    slope: SlopeFit | None
    target: float
    tolerance: float
    passed: bool
    extra: dict = field(default_factory=dict)
    runtime: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "kind": self.kind,
            "config": self.config,
            "cells": [c.to_dict() for c in self.cells],
            "slope": None if self.slope is None else {
                "slope": self.slope.slope, "intercept": self.slope.intercept, "r2": self.slope.r2},
            "target_exponent": self.target,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }
        out.update(self.extra)
        return out


def _run_cells(cfg, cells, filt=None, **kw):
    out, timings = [], []
    for idx, (n, m) in enumerate(cells):
        t0 = time.perf_counter()
        out.append(run_cell(cfg, n, m, cell_seeds(cfg, idx), filt=filt, **kw))
        timings.append(time.perf_counter() - t0)
        log.info("cell n=%d m=%s median=%.4g (%.1fs)", n, m, out[-1].median, timings[-1])
    return out, timings


def _slope_of(cells, against: str) -> SlopeFit | None:
    good = [c for c in cells if c.errors]
    pts = [((c.n if against == "n" else c.nm), c.median) for c in good]
    try:
        return fit_slope(pts)
    except DegenerateCells as exc:
        log.warning("slope not fitted: %s", exc)
        return None


def run_rate(cfg: ExperimentConfig) -> RateReport:
    t0 = time.perf_counter()
    cells, timings = _run_cells(cfg, cfg.cells())
    fit = _slope_of(cells, cfg.slope_against)
    target = target_exponent(cfg)
    passed = fit is not None and abs(fit.slope - target) <= cfg.tolerance
    return RateReport("rate", cfg.to_dict(), cells, fit, target, cfg.tolerance, passed,
                      runtime={"total_s": time.perf_counter() - t0, "cells_s": timings})


def phase_targets(cfg: ExperimentConfig, gamma: float, filt: Filter | None = None):
    """Predicted slope against ``n`` when ``m = n^gamma``."""
    filt = filt or cfg.main_filter()
    r = min(cfg.alpha, filt.qualification)
    gamma_star = 1.0 / (2.0 * cfg.b * r)
    if gamma >= gamma_star:
        return gamma_star, "parametric", -0.5
    return gamma_star, "nonparametric", -(1.0 + gamma) * r * cfg.b / (1.0 + 2.0 * r * cfg.b)


def phase_transition_scan(cfg: ExperimentConfig, gammas=None) -> RateReport:
    """For each gamma set ``m = ceil(n^gamma)`` and fit the error slope against ``n``.

    Only the ``n`` values with ``n * m <= cfg.max_points`` are used, so dense
    regimes stay within the dense-solver budget.
    """
    t0 = time.perf_counter()
    gammas = list(cfg.gammas if gammas is None else gammas)
    rows, all_cells, passed = [], [], True
    for g_idx, gamma in enumerate(gammas):
        cells = []
        for n in cfg.n:
            m = int(math.ceil(n**gamma - 1e-12))
            if n * m <= cfg.max_points:
                cells.append((int(n), max(m, 2 if cfg.task == "covariance" else 1)))
        sub = cfg.replace(seed=cfg.seed + 1_000_003 * g_idx)
        results, _ = _run_cells(sub, cells)
        fit = _slope_of(results, "n")
        gamma_star, regime, target = phase_targets(cfg, gamma)
        ok = fit is not None and abs(fit.slope - target) <= cfg.tolerance
        passed &= ok
        rows.append({
            "gamma": gamma, "gamma_star": gamma_star, "regime": regime,
            "slope": None if fit is None else fit.slope,
            "intercept": None if fit is None else fit.intercept,
            "r2": None if fit is None else fit.r2,
            "target": target, "passed": ok,
            "cells": [c.to_dict() for c in results],
        })
        all_cells.extend(results)
    regimes = {r["regime"] for r in rows}
    extra = {"gammas": rows, "crossing": len(rows) > 1 and len(regimes) > 1}
    return RateReport("phase", cfg.to_dict(), all_cells, None, math.nan, cfg.tolerance,
                      passed, extra=extra, runtime={"total_s": time.perf_counter() - t0})


def saturation_compare(cfg: ExperimentConfig, min_fraction: float = 0.7,
                       slope_slack: float = 0.02) -> RateReport:
    """Paired runs of ``cfg.filter`` against ``cfg.compare_filter`` on identical seeds.

    Each arm uses the oracle lambda for its own qualification. Passing needs the
    first arm to win (ratio <= 1) in at least ``min_fraction`` of the replications
    of the largest cell, and its slope to be no worse than the second arm's plus
    ``slope_slack``.
    """
    t0 = time.perf_counter()
    fa, fb = cfg.main_filter(), filter_from_name(cfg.compare_filter)
    cells = cfg.cells()
    arm_a, _ = _run_cells(cfg, cells, filt=fa)
    arm_b, _ = _run_cells(cfg, cells, filt=fb)
    ratios, per_cell = [], []
    for a, b in zip(arm_a, arm_b):
        r = np.array(a.errors) / np.array(b.errors) if a.errors and b.errors else np.array([])
        ratios.append(r)
        per_cell.append({"n": a.n, "m": a.m, "nm": a.nm,
                         "median_ratio": float(np.median(r)) if r.size else None,
                         "median_err_a": a.median, "median_err_b": b.median})
    largest = int(np.argmax([c[0] * c[1] for c in cells]))
    r_big = ratios[largest]
    frac = float(np.mean(r_big <= 1.0)) if r_big.size else 0.0
    fit_a = _slope_of(arm_a, cfg.slope_against)
    fit_b = _slope_of(arm_b, cfg.slope_against)
    slope_ok = fit_a is not None and fit_b is not None and fit_a.slope <= fit_b.slope + slope_slack
    passed = frac >= min_fraction and slope_ok
    extra = {
        "filters": [fa.family, fb.family],
        "theoretical_exponents": [target_exponent(cfg, fa), target_exponent(cfg, fb)],
        "slopes": [None if fit_a is None else fit_a.slope, None if fit_b is None else fit_b.slope],
        "largest_cell_win_fraction": frac,
        "min_fraction": min_fraction,
        "slope_slack": slope_slack,
        "per_cell": per_cell,
        "arm_b_cells": [c.to_dict() for c in arm_b],
        "saturation_regime": cfg.alpha > 1,
    }
    return RateReport("saturation", cfg.to_dict(), arm_a, fit_a, target_exponent(cfg, fa),
                      slope_slack, passed, extra=extra,
                      runtime={"total_s": time.perf_counter() - t0})


def diagonal_exclusion_check(cfg: ExperimentConfig, max_ratio_change: float = 0.25,
                             min_inflation: float = 2.0) -> dict:
    """Compare the j != k estimator at ``sigma0 = 0`` and ``cfg.sigma0`` with the
    variant that keeps ``j == k`` pairs, all on identical seeds.

    The diagonal-inclusive variant is scored by its error in the band
    ``|s - t| <= cfg.band`` against the same band error of the j != k estimator.
    """
    n, m = cfg.cells()[-1]
    seeds = cell_seeds(cfg, 0)
    clean = run_cell(cfg, n, m, seeds, sigma0=0.0, include_diagonal=False)
    noisy = run_cell(cfg, n, m, seeds, include_diagonal=False)
    broken = run_cell(cfg, n, m, seeds, include_diagonal=True)
    change = abs(noisy.median / clean.median - 1.0)
    inflation = broken.band_median / noisy.band_median
    return {
        "n": n, "m": m, "sigma0": cfg.sigma0, "band": cfg.band,
        "median_err_sigma0_zero": clean.median,
        "median_err_sigma0": noisy.median,
        "relative_change": change,
        "band_median_err_offdiag": noisy.band_median,
        "band_median_err_with_diag": broken.band_median,
        "band_inflation": inflation,
        "passed": bool(change <= max_ratio_change and inflation >= min_inflation),
        "cells": [clean.to_dict(), noisy.to_dict(), broken.to_dict()],
    }
