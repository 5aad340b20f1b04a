"""Synthetic processes with controlled smoothness: source-condition means, Karhunen-Loeve
Gaussian paths, uniform random designs and Gaussian measurement noise."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constants import KL_TRUNCATION
from .errors import BadRule, BadScheme, BadVariances
from .kernels import MercerSystem
from .mean import SampleSet, harmonic_mean
from .numerics import Grid1D

# --------------------------------------------------------------------------
# rules


@dataclass(frozen=True)
class FixedUnit:
    """``h = e_1``."""


@dataclass(frozen=True)
class PolynomialH:
    """``h_l = l^{-s}``, normalized to unit l2 norm; needs ``s > 1/2``."""

    s: float


@dataclass(frozen=True)
class ExplicitH:
    values: tuple


@dataclass(frozen=True)
class PolynomialXi:
    """KL variances ``scale * k^{-q}``."""

    q: float
    scale: float = 1.0


@dataclass(frozen=True)
class FiniteXi:
    values: tuple


@dataclass(frozen=True)
class Constant:
    m: int | None = None


@dataclass(frozen=True)
class TwoPoint:
    """A fraction ``fraction`` of curves gets ``m_lo`` points, the rest ``m_hi``."""

    m_lo: int
    m_hi: int
    fraction: float

    @property
    def harmonic_mean(self) -> float:
        return 1.0 / (self.fraction / self.m_lo + (1.0 - self.fraction) / self.m_hi)


# --------------------------------------------------------------------------
# mean


@dataclass(frozen=True)
class SourceMean:
    """``mu_0 = sum_l lambda_l^alpha h_l psi_l``."""

    mercer: MercerSystem
    alpha: float
    h: np.ndarray
    coefficients: np.ndarray

    @property
    def h_norm(self) -> float:
        return float(np.linalg.norm(self.h))

    def __call__(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        nz = np.flatnonzero(self.coefficients)
        if nz.size == 0:
            return np.zeros(t.size)
        L = nz[-1] + 1
        return self.coefficients[:L] @ self.mercer.eigenfunctions(t)[:L]


def make_source_mean(mercer: MercerSystem, alpha: float, h_rule=FixedUnit()) -> SourceMean:
    if not alpha > 0:
        raise BadRule(f"smoothness must be positive, got {alpha}")
    L = mercer.size
    if isinstance(h_rule, FixedUnit):
        h = np.zeros(L)
        h[0] = 1.0
    elif isinstance(h_rule, PolynomialH):
        if not h_rule.s > 0.5:
            raise BadRule(f"h_l = l^-s is square summable only for s > 1/2, got {h_rule.s}")
        h = np.arange(1, L + 1, dtype=float) ** (-h_rule.s)
        h /= np.linalg.norm(h)
    elif isinstance(h_rule, ExplicitH):
        v = np.asarray(h_rule.values, dtype=float)
        if v.size > L:
            raise BadRule(f"{v.size} coefficients exceed truncation {L}")
        h = np.zeros(L)
        h[:v.size] = v
    else:
        raise BadRule(f"unknown h rule {h_rule!r}")
    return SourceMean(mercer, float(alpha), h, mercer.eigenvalues**alpha * h)


# --------------------------------------------------------------------------
# process


@dataclass(frozen=True)
class ProcessSpec:
    mean: SourceMean
    xi: np.ndarray
    basis: MercerSystem
    sigma0: float
    m_scheme: object = field(default_factory=Constant)

    def basis_functions(self, t) -> np.ndarray:
        return self.basis.eigenfunctions(t)[: self.xi.size]

    def true_mean(self, t) -> np.ndarray:
        return self.mean(t)

    def true_cov(self, s, t) -> np.ndarray:
        Ps = self.basis_functions(s)
        Pt = self.basis_functions(t)
        return (Ps.T * self.xi) @ Pt

    def pointwise_variance(self, t) -> np.ndarray:
        P = self.basis_functions(t)
        return self.xi @ P**2


def make_process(mean: SourceMean, xi_rule=PolynomialXi(2.0), sigma0: float = 0.0,
                 m_scheme=Constant(), basis: MercerSystem | None = None,
                 kl_size: int = KL_TRUNCATION) -> ProcessSpec:
    """KL process ``X = mu_0 + sum_k sqrt(xi_k) Z_k phi_k`` with ``Z_k`` iid N(0, 1)."""
    basis = mean.mercer if basis is None else basis
    if isinstance(xi_rule, PolynomialXi):
        if not xi_rule.q > 1:
            raise BadVariances(f"xi_k = k^-q needs q > 1, got {xi_rule.q}")
        if xi_rule.scale < 0:
            raise BadVariances("negative variance scale")
        L = min(kl_size, basis.size)
        xi = xi_rule.scale * np.arange(1, L + 1, dtype=float) ** (-xi_rule.q)
    elif isinstance(xi_rule, FiniteXi):
        xi = np.asarray(xi_rule.values, dtype=float).ravel()
        if xi.size > basis.size:
            raise BadVariances(f"{xi.size} variances exceed basis size {basis.size}")
    else:
        raise BadVariances(f"unknown variance rule {xi_rule!r}")
    if np.any(xi < 0) or not np.all(np.isfinite(xi)):
        raise BadVariances("KL variances must be finite and nonnegative")
    if sigma0 < 0:
        raise BadVariances("noise level must be nonnegative")
    return ProcessSpec(mean, xi, basis, float(sigma0), m_scheme)


@dataclass(frozen=True)
class DrawnDataset:
    samples: SampleSet
    spec: ProcessSpec
    seed: int

    def true_mean(self, t) -> np.ndarray:
        return self.spec.true_mean(t)

    def true_cov(self, s, t) -> np.ndarray:
        return self.spec.true_cov(s, t)


def realize_counts(scheme, n: int, target_m: float, rng: np.random.Generator) -> np.ndarray:
    if isinstance(scheme, Constant):
        m = target_m if scheme.m is None else scheme.m
        if int(m) != m or m < 1:
            raise BadScheme(f"constant scheme needs an integer m >= 1, got {m}")
        if scheme.m is not None and scheme.m != target_m:
            raise BadScheme(f"constant scheme m={scheme.m} differs from target {target_m}")
        return np.full(n, int(m), dtype=np.int64)
    if isinstance(scheme, TwoPoint):
        if scheme.m_lo < 1 or scheme.m_hi < 1 or not 0.0 <= scheme.fraction <= 1.0:
            raise BadScheme(f"invalid two-point scheme {scheme!r}")
        n_lo = int(round(scheme.fraction * n))
        counts = np.full(n, scheme.m_hi, dtype=np.int64)
        counts[rng.permutation(n)[:n_lo]] = scheme.m_lo
        hm = harmonic_mean(counts)
        if abs(hm - target_m) > 0.05 * target_m:
            raise BadScheme(f"realized harmonic mean {hm:.4g} is not within 5% of {target_m}")
        return counts
    raise BadScheme(f"unknown scheme {scheme!r}")


def draw(spec: ProcessSpec, n: int, target_m: float, seed: int) -> DrawnDataset:
    """Draw ``Y_ij = X_i(t_ij) + sigma0 eps_ij`` with ``t_ij`` iid Uniform[0, 1]."""
    if n < 1 or target_m < 1:
        raise ValueError("need n >= 1 and target_m >= 1")
    rng = np.random.default_rng(seed)
    counts = realize_counts(spec.m_scheme, int(n), target_m, rng)
    N = int(counts.sum())
    t = rng.uniform(0.0, 1.0, size=N)
    Z = rng.standard_normal((int(n), spec.xi.size))
    eps = rng.standard_normal(N)
    curve = np.repeat(np.arange(int(n)), counts)
    y = spec.true_mean(t)
    if spec.xi.size and np.any(spec.xi > 0):
        Phi = spec.basis_functions(t)  # (L_X, N)
        y = y + np.einsum("kn,nk->n", Phi, Z[curve] * np.sqrt(spec.xi))
    if spec.sigma0 > 0:
        y = y + spec.sigma0 * eps
    return DrawnDataset(SampleSet(t, y, counts), spec, int(seed))


def true_mean_on_grid(spec: ProcessSpec, grid: Grid1D) -> np.ndarray:
    return spec.true_mean(grid.nodes)


def true_cov_on_grid(spec: ProcessSpec, grid: Grid1D) -> np.ndarray:
    C = spec.true_cov(grid.nodes, grid.nodes)
    return 0.5 * (C + C.T)
