"""Spectrally regularized estimation of the mean function from sparse noisy curves."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import BadExponent, BadSampleSet
from .filters import Filter
from .kernels import Kernel1, MercerSystem, effective_dimension, gram_matrix
from .numerics import Grid1D, apply_matrix_function_to, sym_eigen
from .representer import filtered_solve


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Observations ``(t_ij, Y_ij)`` stored flat, curve by curve.

    ``counts[i]`` is the number of points ``m_i`` on curve ``i``.
    """

    t: np.ndarray
    y: np.ndarray
    counts: np.ndarray
    harmonic_mean: float = field(init=False)

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float).ravel()
        y = np.asarray(self.y, dtype=float).ravel()
        counts = np.asarray(self.counts, dtype=np.int64).ravel()
        if counts.size < 1 or np.any(counts < 1):
            raise BadSampleSet("need n >= 1 curves, each with m_i >= 1 points")
        if t.shape != y.shape or t.size != counts.sum():
            raise BadSampleSet("t, y and counts are inconsistent")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(y))):
            raise BadSampleSet("non-finite observations")
        if t.min() < 0.0 or t.max() > 1.0:
            raise BadSampleSet("design points must lie in [0, 1]")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "harmonic_mean", harmonic_mean(counts))

    @classmethod
    def from_curves(cls, curves) -> "SampleSet":
        """Build from an iterable of ``(t_i, y_i)`` array pairs."""
        ts, ys, counts = [], [], []
        for t_i, y_i in curves:
            t_i = np.atleast_1d(np.asarray(t_i, dtype=float))
            ys.append(np.atleast_1d(np.asarray(y_i, dtype=float)))
            ts.append(t_i)
            counts.append(t_i.size)
        if not ts:
            raise BadSampleSet("no curves")
        return cls(np.concatenate(ts), np.concatenate(ys), np.array(counts))

    @property
    def n(self) -> int:
        return int(self.counts.size)

    @property
    def total(self) -> int:
        return int(self.t.size)

    @cached_property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.counts)])

    @cached_property
    def curve_index(self) -> np.ndarray:
        return np.repeat(np.arange(self.n), self.counts)

    def curve(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        a, b = self.offsets[i], self.offsets[i + 1]
        return self.t[a:b], self.y[a:b]

    def curves(self):
        for i in range(self.n):
            yield self.curve(i)

    def with_responses(self, y) -> "SampleSet":
        return SampleSet(self.t, y, self.counts)

    def subset(self, curve_ids) -> "SampleSet":
        return SampleSet.from_curves(self.curve(int(i)) for i in curve_ids)


def harmonic_mean(counts) -> float:
    counts = np.asarray(counts, dtype=float)
    return float(1.0 / np.mean(1.0 / counts))


def assemble_weight(samples: SampleSet) -> np.ndarray:
    """Diagonal of ``W``: ``1/(n m_i)`` repeated ``m_i`` times for each curve."""
    return np.repeat(1.0 / (samples.n * samples.counts.astype(float)), samples.counts)


@dataclass(frozen=True)
class MeanEstimate:
    anchors: np.ndarray
    alpha: np.ndarray
    kernel: Kernel1
    lam: float
    filter: Filter
    form: str = "operator"

    def __call__(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return self.kernel.gram(t, self.anchors) @ self.alpha

    def evaluate(self, grid: Grid1D) -> np.ndarray:
        return self(grid.nodes)


@dataclass(frozen=True)
class MeanFitDiagnostics:
    spectrum: np.ndarray | None
    effective_dimension: float | None
    weighted_sse: float


def fit_mean(samples: SampleSet, kernel: Kernel1, filt: Filter, lam: float,
             form: str = "operator", solver: str = "eigen",
             diagnostics: bool = True) -> tuple[MeanEstimate, MeanFitDiagnostics]:
    """Fit ``mu_hat(t) = sum_ij alpha_ij k(t_ij, t)``.

    ``form="operator"`` (default) gives the coefficients of ``g_lam(S_n) V``
    with ``S_n = sum_ij w_ij k(t_ij, .) (x) k(t_ij, .)``, which is what
    :func:`fit_mean_operator_form` computes in eigen-coordinates.
    ``form="kwk"`` applies the filter to ``KWK`` and returns
    ``g_lam(KWK) KWY``. ``solver="direct"`` replaces the eigendecomposition by a
    Cholesky solve (Tikhonov only) and skips the spectrum.
    """
    K = gram_matrix(kernel, samples.t)
    w = assemble_weight(samples)
    res = filtered_solve(K, w, samples.y, filt, lam, form=form, solver=solver)
    est = MeanEstimate(samples.t.copy(), res.coefficients, kernel, float(lam), filt, form)
    fitted = K @ res.coefficients
    sse = float(np.sum(w * (samples.y - fitted) ** 2))
    spec = res.spectrum
    if not diagnostics or spec is None:
        return est, MeanFitDiagnostics(spec, None, sse)
    pos = spec[spec > 0]
    return est, MeanFitDiagnostics(spec, effective_dimension(pos, lam) if pos.size else 0.0, sse)


def evaluate_mean(est: MeanEstimate, grid: Grid1D) -> np.ndarray:
    return est.evaluate(grid)


def oracle_exponent(alpha_smooth: float, b: float, nu: float) -> float:
    if not b > 1:
        raise BadExponent(f"eigen-decay exponent must exceed 1, got {b}")
    if not alpha_smooth > 0:
        raise BadExponent(f"smoothness must be positive, got {alpha_smooth}")
    r = min(alpha_smooth, nu)
    return b / (1.0 + 2.0 * r * b)


def oracle_lambda_mean(n: float, m: float, alpha_smooth: float, b: float, nu: float) -> float:
    """``(mn)^{-b / (1 + 2 r b)}`` with ``r = min(alpha, nu)``."""
    if n < 1 or m < 1:
        raise ValueError("n and m must be at least 1")
    return float((m * n) ** (-oracle_exponent(alpha_smooth, b, nu)))


def fit_mean_operator_form(samples: SampleSet, mercer: MercerSystem, filt: Filter,
                           lam: float, grid: Grid1D) -> np.ndarray:
    """Evaluate ``Lambda^{1/2} g_lam(A_n) V_1`` on ``grid``.

    ``A_n`` and ``V_1`` are built from the square-root kernel sections
    ``k^{1/2}(x, .) = sum_l sqrt(lambda_l) psi_l(x) psi_l(.)`` in the
    eigen-coordinates of ``mercer``.
    """
    sqrt_lam = np.sqrt(mercer.eigenvalues)
    Phi = sqrt_lam[:, None] * mercer.eigenfunctions(samples.t)  # (L, N)
    w = assemble_weight(samples)
    A = (Phi * w[None, :]) @ Phi.T
    V1 = Phi @ (w * samples.y)
    eig = sym_eigen(0.5 * (A + A.T)).clamped()
    a = max(float(eig.eigenvalues[0]), np.finfo(float).tiny)
    coef = sqrt_lam * apply_matrix_function_to(eig, lambda d: filt.g(lam, d, a), V1)
    return coef @ mercer.eigenfunctions(grid.nodes)


def select_lambda_cv(samples: SampleSet, kernel: Kernel1, filt: Filter, lambdas,
                     folds: int = 5, seed: int = 0, solver: str = "eigen") -> float:
    """Held-out-curve validation over a user-supplied lambda list.

    Not part of the estimator's theory; the analysis only prescribes oracle
    schedules. The score is the weighted squared prediction error on held-out
    curves, each curve weighted by ``1/m_i``.
    """
    lambdas = [float(l) for l in lambdas]
    if not lambdas:
        raise ValueError("empty lambda list")
    n = samples.n
    folds = max(2, min(folds, n))
    order = np.random.default_rng(seed).permutation(n)
    parts = np.array_split(order, folds)
    scores = np.zeros(len(lambdas))
    for part in parts:
        train = np.setdiff1d(order, part)
        if train.size == 0:
            continue
        tr = samples.subset(np.sort(train))
        te = samples.subset(np.sort(part))
        wt = np.repeat(1.0 / te.counts, te.counts)
        for j, lam in enumerate(lambdas):
            est, _ = fit_mean(tr, kernel, filt, lam, solver=solver, diagnostics=False)
            scores[j] += float(np.sum(wt * (te.y - est(te.t)) ** 2))
    return lambdas[int(np.argmin(scores))]
