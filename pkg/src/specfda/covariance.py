"""Plug-in covariance estimation over within-curve point pairs.

Responses are products of mean-centred observations on ordered pairs ``j != k``
of the same curve; the diagonal ``j == k`` is left out because it carries the
measurement-noise variance. The fit is the pair-level analogue of the mean fit
with kernel ``K`` on ``[0,1]^2`` and weights ``1/(n m_i (m_i - 1))``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .constants import PAIR_CAP
from .errors import NoPairs, PairCapExceeded
from .filters import Filter
from .kernels import Kernel2, ProductKernel
from .mean import SampleSet, oracle_lambda_mean
from .numerics import Grid1D
from .representer import filtered_solve


@dataclass(frozen=True)
class PairDesign:
    """Ordered within-curve pairs and their centred-product responses.

    ``orbit`` maps each pair to its unordered representative (``(j, k)`` and
    ``(k, j)`` share one); ``first`` indexes one member of every orbit.
    """

    pairs: np.ndarray  # (P, 2) as (t_ij, t_ik)
    responses: np.ndarray  # (P,)
    weights: np.ndarray  # (P,)
    curve: np.ndarray  # (P,) curve index
    counts: np.ndarray  # pairs contributed by each curve (0 for skipped curves)
    orbit: np.ndarray
    first: np.ndarray
    n: int
    include_diagonal: bool = False

    @property
    def size(self) -> int:
        return int(self.pairs.shape[0])

    @property
    def contributing_curves(self) -> int:
        return int(np.count_nonzero(self.counts))


def _pair_indices(m: int, include_diagonal: bool):
    j, k = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
    j, k = j.ravel(), k.ravel()
    if not include_diagonal:
        keep = j != k
        j, k = j[keep], k[keep]
    return j, k


def assemble_pairs(samples: SampleSet, mean: Callable, include_diagonal: bool = False) -> PairDesign:
    """Enumerate pairs curve by curve, lexicographically in ``(j, k)``.

    ``mean`` is any callable evaluating the centring function, normally a
    :class:`~specfda.mean.MeanEstimate`. ``include_diagonal=True`` builds the
    biased variant that keeps ``j == k`` (weights ``1/(n m_i^2)``); it exists to
    demonstrate why the diagonal is excluded.
    """
    resid = samples.y - np.asarray(mean(samples.t), dtype=float)
    pairs, resp, weights, curve, orbit = [], [], [], [], []
    counts = np.zeros(samples.n, dtype=np.int64)
    n_orbits = 0
    for i in range(samples.n):
        m = int(samples.counts[i])
        if m < 2 and not include_diagonal:
            continue
        a = samples.offsets[i]
        t_i = samples.t[a:a + m]
        r_i = resid[a:a + m]
        j, k = _pair_indices(m, include_diagonal)
        pairs.append(np.column_stack([t_i[j], t_i[k]]))
        resp.append(r_i[j] * r_i[k])
        denom = m * m if include_diagonal else m * (m - 1)
        weights.append(np.full(j.size, 1.0 / (samples.n * denom)))
        curve.append(np.full(j.size, i))
        # orbit id of (j, k) is the rank of (min, max) among this curve's unordered pairs
        lo, hi = np.minimum(j, k), np.maximum(j, k)
        local = lo * m + hi
        uniq, inv = np.unique(local, return_inverse=True)
        orbit.append(n_orbits + inv)
        n_orbits += uniq.size
        counts[i] = j.size
    if not pairs:
        raise NoPairs("no curve has at least two observations")
    orbit = np.concatenate(orbit)
    _, first = np.unique(orbit, return_index=True)
    return PairDesign(
        pairs=np.vstack(pairs),
        responses=np.concatenate(resp),
        weights=np.concatenate(weights),
        curve=np.concatenate(curve),
        counts=counts,
        orbit=orbit,
        first=first,
        n=samples.n,
        include_diagonal=include_diagonal,
    )


@dataclass(frozen=True)
class CovEstimate:
    anchors: np.ndarray  # (P, 2)
    alpha: np.ndarray  # (P,)
    kernel: Kernel2
    lam: float
    eta: float | None
    filter: Filter

    def __call__(self, s, t) -> np.ndarray:
        """``C_hat(s_a, t_b)`` on the tensor product of ``s`` and ``t``."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if isinstance(self.kernel, ProductKernel):
            A, B = self.kernel.sections(self.anchors, s, t)
            return (A * self.alpha[:, None]).T @ B
        S, T = np.meshgrid(s, t, indexing="ij")
        grid_pairs = np.column_stack([S.ravel(), T.ravel()])
        return (self.kernel.gram(grid_pairs, self.anchors) @ self.alpha).reshape(s.size, t.size)

    def evaluate(self, grid: Grid1D) -> np.ndarray:
        return self(grid.nodes, grid.nodes)


def fit_covariance(samples: SampleSet, mean: Callable, kernel2: Kernel2, filt: Filter,
                   lam: float, eta: float | None = None, form: str = "operator",
                   solver: str = "eigen", pair_cap: int = PAIR_CAP,
                   include_diagonal: bool = False,
                   design: PairDesign | None = None) -> CovEstimate:
    """Fit ``C_hat(s, t) = sum_p alpha_p K(pair_p, (s, t))``.

    For swap-invariant kernels the ordered system is solved exactly on
    unordered pairs: swapping both members of every pair commutes with the
    Gram and weight matrices and fixes the responses, so the solution is
    swap-symmetric and each orbit's coefficient is split evenly between its
    members.
    """
    if design is None:
        design = assemble_pairs(samples, mean, include_diagonal=include_diagonal)
    if design.size > pair_cap:
        raise PairCapExceeded(f"{design.size} pairs exceed the cap of {pair_cap}")
    if eta is None:
        eta = getattr(mean, "lam", None)

    if form == "operator" and kernel2.swap_invariant:
        rep = design.pairs[design.first]
        swapped = rep[:, ::-1]
        G = 0.5 * (kernel2.gram(rep) + kernel2.gram(rep, swapped))
        G = 0.5 * (G + G.T)
        size = np.bincount(design.orbit)
        w = design.weights[design.first] * size
        res = filtered_solve(G, w, design.responses[design.first], filt, lam,
                             form=form, solver=solver)
        alpha = res.coefficients[design.orbit] / size[design.orbit]
    else:
        G = kernel2.gram(design.pairs)
        G = 0.5 * (G + G.T)
        res = filtered_solve(G, design.weights, design.responses, filt, lam,
                             form=form, solver=solver)
        alpha = res.coefficients
    return CovEstimate(design.pairs.copy(), alpha, kernel2, float(lam),
                       None if eta is None else float(eta), filt)


def evaluate_cov(est: CovEstimate, grid: Grid1D) -> np.ndarray:
    return est.evaluate(grid)


def oracle_lambda_cov(n: float, m: float, alpha1: float, b1: float, nu: float) -> float:
    """``(mn)^{-b1 / (1 + 2 r1 b1)}`` with ``r1 = min(alpha1, nu)``."""
    return oracle_lambda_mean(n, m, alpha1, b1, nu)


def oracle_schedule(n: float, m: float, alpha: float, b: float, nu_mean: float,
                    alpha1: float, b1: float, nu_cov: float) -> tuple[float, float]:
    """Joint ``(eta, lambda)`` choice: each parameter at its own oracle rate."""
    return (oracle_lambda_mean(n, m, alpha, b, nu_mean),
            oracle_lambda_cov(n, m, alpha1, b1, nu_cov))
