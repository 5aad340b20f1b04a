"""Reproducing kernels on [0, 1] and [0, 1]^2, Gram assembly and Mercer systems."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma as gamma_fn
from scipy.special import kv

from .constants import MERCER_TRUNCATION, NYSTROM_GRID
from .errors import BadLambda, OutOfDomain, TruncationTooLarge
from .numerics import Grid1D, sym_eigen, trapezoid_grid

_DOMAIN_SLACK = 1e-12


def _check_domain(*arrays) -> None:
    for a in arrays:
        a = np.asarray(a, dtype=float)
        if a.size and (not np.all(np.isfinite(a)) or a.min() < -_DOMAIN_SLACK
                       or a.max() > 1.0 + _DOMAIN_SLACK):
            raise OutOfDomain("kernel arguments must lie in [0, 1]")


class Kernel1:
    """Kernel on [0, 1] x [0, 1]. Calls broadcast like numpy ufuncs."""

    name = "kernel"
    kappa2 = 1.0
    # Polynomial eigen-decay exponent when known exactly.
    decay_exponent: float | None = None

    def __call__(self, s, t):
        _check_domain(s, t)
        return self._eval(np.asarray(s, dtype=float), np.asarray(t, dtype=float))

    def _eval(self, s, t):
        raise NotImplementedError

    def gram(self, x, y=None) -> np.ndarray:
        x = np.asarray(x, dtype=float).ravel()
        y = x if y is None else np.asarray(y, dtype=float).ravel()
        return self(x[:, None], y[None, :])


@dataclass(frozen=True)
class BrownianMin(Kernel1):
    name = "brownian"
    decay_exponent = 2.0

    def _eval(self, s, t):
        return np.minimum(s, t)


@dataclass(frozen=True)
class Gaussian(Kernel1):
    bandwidth: float = 1.0
    name = "gaussian"

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")

    def _eval(self, s, t):
        return np.exp(-((s - t) ** 2) / (2.0 * self.bandwidth**2))


@dataclass(frozen=True)
class Matern(Kernel1):
    smoothness: float = 1.5
    lengthscale: float = 0.2
    name = "matern"

    def __post_init__(self):
        if not (self.smoothness > 0 and self.lengthscale > 0):
            raise ValueError("Matern smoothness and lengthscale must be positive")

    def _eval(self, s, t):
        r = np.abs(s - t) / self.lengthscale
        nu = self.smoothness
        if nu == 0.5:
            return np.exp(-r)
        if nu == 1.5:
            a = np.sqrt(3.0) * r
            return (1.0 + a) * np.exp(-a)
        if nu == 2.5:
            a = np.sqrt(5.0) * r
            return (1.0 + a + a**2 / 3.0) * np.exp(-a)
        a = np.sqrt(2.0 * nu) * r
        # below this the Bessel factor overflows; the kernel is 1 to machine precision
        tiny = a < 1e-12
        a = np.where(tiny, 1.0, a)
        out = (2.0 ** (1.0 - nu) / gamma_fn(nu)) * a**nu * kv(nu, a)
        return np.where(tiny, 1.0, out)


def eval_kernel1(k: Kernel1, s: float, t: float) -> float:
    return float(k(s, t))


def gram_matrix(k: Kernel1, points) -> np.ndarray:
    """Symmetric Gram matrix ``G[a, b] = k(x_a, x_b)``."""
    x = np.asarray(points, dtype=float).ravel()
    G = k.gram(x)
    # Exact symmetry regardless of floating-point evaluation order.
    return 0.5 * (G + G.T)


def kernel_from_name(name: str, **params) -> Kernel1:
    key = name.lower()
    if key in ("brownian", "brownianmin", "min"):
        return BrownianMin()
    if key == "gaussian":
        return Gaussian(bandwidth=params.get("bandwidth", 1.0))
    if key == "matern":
        return Matern(smoothness=params.get("smoothness", 1.5),
                      lengthscale=params.get("lengthscale", 0.2))
    raise ValueError(f"unknown kernel {name!r}")


# --------------------------------------------------------------------------
# kernels on pairs


class Kernel2:
    """Kernel on ([0,1]^2) x ([0,1]^2); pair arrays have a trailing axis of size 2."""

    swap_invariant = True

    def __call__(self, p, q):
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        _check_domain(p, q)
        return self._eval(p, q)

    def gram(self, P, Q=None) -> np.ndarray:
        P = np.asarray(P, dtype=float).reshape(-1, 2)
        Q = P if Q is None else np.asarray(Q, dtype=float).reshape(-1, 2)
        return self(P[:, None, :], Q[None, :, :])


@dataclass(frozen=True)
class ProductKernel(Kernel2):
    """``K((s, t), (u, v)) = k(s, u) k(t, v)``."""

    k: Kernel1 = field(default_factory=BrownianMin)

    def _eval(self, p, q):
        return self.k._eval(p[..., 0], q[..., 0]) * self.k._eval(p[..., 1], q[..., 1])

    def gram(self, P, Q=None) -> np.ndarray:
        P = np.asarray(P, dtype=float).reshape(-1, 2)
        Q = P if Q is None else np.asarray(Q, dtype=float).reshape(-1, 2)
        _check_domain(P, Q)
        return self.k.gram(P[:, 0], Q[:, 0]) * self.k.gram(P[:, 1], Q[:, 1])

    def sections(self, P, s, t) -> tuple[np.ndarray, np.ndarray]:
        """Factors ``A[p, a] = k(P_p1, s_a)`` and ``B[p, b] = k(P_p2, t_b)``."""
        P = np.asarray(P, dtype=float).reshape(-1, 2)
        return self.k.gram(P[:, 0], s), self.k.gram(P[:, 1], t)


@dataclass(frozen=True)
class DirectKernel2(Kernel2):
    """Radial 1-D family applied to the Euclidean distance in [0,1]^2."""

    base: Kernel1 = field(default_factory=Gaussian)

    def __post_init__(self):
        if isinstance(self.base, BrownianMin):
            raise ValueError("BrownianMin is not radial; use ProductKernel")

    def _eval(self, p, q):
        r = np.sqrt(np.sum((p - q) ** 2, axis=-1))
        return self.base._eval(np.zeros_like(r), r)


def eval_kernel2(K: Kernel2, p, q) -> float:
    return float(K(p, q))


# --------------------------------------------------------------------------
# Mercer systems


@dataclass(frozen=True)
class MercerSystem:
    """Truncated eigensystem ``(lambda_i, psi_i)`` of the integral operator of ``kernel``.

    ``grid_values[i]`` holds ``psi_i`` on ``grid.nodes``. Use :meth:`eigenfunctions`
    for evaluation at arbitrary points.
    """

    kernel: Kernel1
    eigenvalues: np.ndarray
    grid: Grid1D
    grid_values: np.ndarray
    source: str  # "analytic" or "nystrom"

    @property
    def size(self) -> int:
        return self.eigenvalues.size

    def eigenfunctions(self, t) -> np.ndarray:
        """Return an ``(L, len(t))`` array of eigenfunction values."""
        t = np.asarray(t, dtype=float).ravel()
        _check_domain(t)
        if self.source == "analytic":
            return _brownian_eigenfunctions(self.size, t)
        # Nystrom extension: psi(t) = lambda^{-1} sum_g w_g k(t, s_g) psi(s_g)
        G = self.kernel.gram(self.grid.nodes, t)
        return (self.grid_values * self.grid.weights) @ G / self.eigenvalues[:, None]

    def reconstruct(self, s, t) -> np.ndarray:
        """Truncated Mercer sum ``sum_i lambda_i psi_i(s) psi_i(t)`` as a matrix."""
        Ps = self.eigenfunctions(s)
        Pt = self.eigenfunctions(t)
        return (Ps.T * self.eigenvalues) @ Pt


def brownian_eigenvalues(L: int) -> np.ndarray:
    i = np.arange(1, L + 1)
    return 1.0 / (((i - 0.5) * np.pi) ** 2)


def _brownian_eigenfunctions(L: int, t: np.ndarray) -> np.ndarray:
    freq = (np.arange(1, L + 1) - 0.5) * np.pi
    return np.sqrt(2.0) * np.sin(np.outer(freq, t))


def mercer_system(k: Kernel1, L: int = MERCER_TRUNCATION,
                  grid: Grid1D | None = None) -> MercerSystem:
    """Analytic system for :class:`BrownianMin`, Nystrom otherwise.

    Nystrom eigendecomposes ``W^{1/2} G W^{1/2}`` on the quadrature grid and
    rescales eigenvectors by ``W^{-1/2}``. Numerically null eigenvalues are
    dropped, so smooth kernels may return fewer than ``L`` pairs.
    """
    if grid is None:
        grid = trapezoid_grid(NYSTROM_GRID)
    if L < 1 or L > grid.nodes.size:
        raise TruncationTooLarge(f"truncation {L} exceeds grid size {grid.nodes.size}")
    if isinstance(k, BrownianMin):
        lam = brownian_eigenvalues(L)
        return MercerSystem(k, lam, grid, _brownian_eigenfunctions(L, grid.nodes), "analytic")
    sw = np.sqrt(grid.weights)
    G = gram_matrix(k, grid.nodes)
    eig = sym_eigen(sw[:, None] * G * sw[None, :])
    lam = eig.eigenvalues[:L]
    keep = lam > max(lam[0], 0.0) * 1e-13
    lam = lam[keep]
    vecs = eig.eigenvectors[:, :L][:, keep] / sw[:, None]
    return MercerSystem(k, lam.copy(), grid, vecs.T.copy(), "nystrom")


def product_spectrum(mercer: MercerSystem, size: int | None = None):
    """Eigenvalues ``lambda_i lambda_j`` of ``k (x) k`` sorted descending, with index pairs."""
    lam = mercer.eigenvalues
    prod = np.outer(lam, lam).ravel()
    order = np.argsort(-prod, kind="stable")
    if size is not None:
        order = order[:size]
    L = lam.size
    return prod[order], np.column_stack(np.divmod(order, L))


def effective_dimension(eigs, lam: float) -> float:
    """``sum_i e_i / (e_i + lam)``, the trace of ``(A + lam I)^{-1} A``."""
    if not lam > 0:
        raise BadLambda(f"lambda must be positive, got {lam}")
    eigs = np.asarray(eigs, dtype=float)
    return float(np.sum(eigs / (eigs + lam)))
