"""Filtered solves of weighted kernel systems shared by the mean and covariance fits.

Given a Gram matrix ``G`` over anchors, positive weights ``w`` and responses
``y``, two coefficient forms are available:

``"operator"``
    ``alpha = W^{1/2} g(W^{1/2} G W^{1/2}) W^{1/2} y``, the coefficient vector of
    ``g(S) V`` where ``S = sum_a w_a G(., a) (x) G(., a)`` acts on the RKHS and
    ``V = sum_a w_a y_a G(., a)``. Its spectrum lives in ``[0, trace(WG)]``.
``"kwk"``
    ``alpha = g(G W G) G W y``, the filter applied to ``GWG`` directly.

Solvers: ``"eigen"`` (full decomposition, any filter), ``"direct"`` (Cholesky,
Tikhonov only) and ``"partial"`` (eigenpairs above lambda, cut-off only).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .filters import Filter
from .numerics import apply_matrix_function_to, sym_eigen

FORMS = ("operator", "kwk")
SOLVERS = ("eigen", "direct", "partial")


@dataclass(frozen=True)
class FilteredSolve:
    coefficients: np.ndarray
    spectrum: np.ndarray | None  # descending, clamped; None for direct solves


def filtered_solve(G: np.ndarray, w: np.ndarray, y: np.ndarray, filt: Filter, lam: float,
                   form: str = "operator", solver: str = "eigen") -> FilteredSolve:
    if form not in FORMS:
        raise ValueError(f"unknown form {form!r}")
    if solver not in SOLVERS:
        raise ValueError(f"unknown solver {solver!r}")
    if solver == "direct" and filt.family != "tikhonov":
        raise ValueError("direct solver is only available for Tikhonov")
    if solver == "partial" and filt.family != "cutoff":
        raise ValueError("partial solver is only available for spectral cut-off")
    # Validates lambda before any heavy work.
    filt.g(lam, np.zeros(0))
    w = np.asarray(w, dtype=float)
    y = np.asarray(y, dtype=float)
    if not np.any(y):
        return FilteredSolve(np.zeros_like(y), None if solver != "eigen"
                             else _spectrum(G, w, form))

    if form == "operator":
        sw = np.sqrt(w)
        if solver == "direct":
            # (WG + lam I) alpha = W y  <=>  (G + lam W^{-1}) alpha = y
            A = G + np.diag(lam / w)
            alpha = scipy.linalg.solve(A, y, assume_a="pos")
            return FilteredSolve(alpha, None)
        M = sw[:, None] * G * sw[None, :]
        if solver == "partial":
            return FilteredSolve(sw * _cutoff_apply(M, lam, sw * y), None)
        eig = sym_eigen(M).clamped()
        a = max(float(eig.eigenvalues[0]), np.finfo(float).tiny)
        inner = apply_matrix_function_to(eig, lambda d: filt.g(lam, d, a), sw * y)
        return FilteredSolve(sw * inner, eig.eigenvalues)

    GW = G * w[None, :]
    M = GW @ G
    M = 0.5 * (M + M.T)
    rhs = GW @ y
    if solver == "direct":
        alpha = scipy.linalg.solve(M + lam * np.eye(M.shape[0]), rhs, assume_a="pos")
        return FilteredSolve(alpha, None)
    if solver == "partial":
        return FilteredSolve(_cutoff_apply(M, lam, rhs), None)
    eig = sym_eigen(M).clamped()
    a = max(float(eig.eigenvalues[0]), np.finfo(float).tiny)
    alpha = apply_matrix_function_to(eig, lambda d: filt.g(lam, d, a), rhs)
    return FilteredSolve(alpha, eig.eigenvalues)


def _cutoff_apply(M, lam, v):
    """Spectral cut-off from the eigenpairs with eigenvalue >= lam only."""
    M = 0.5 * (M + M.T)
    d, V = scipy.linalg.eigh(M, subset_by_value=(np.nextafter(lam, -np.inf), np.inf),
                             driver="evr")
    if d.size == 0:
        return np.zeros_like(v)
    return V @ ((V.T @ v) / d)


def _spectrum(G, w, form):
    if form == "operator":
        sw = np.sqrt(w)
        return sym_eigen(sw[:, None] * G * sw[None, :]).clamped().eigenvalues
    M = (G * w[None, :]) @ G
    return sym_eigen(0.5 * (M + M.T)).clamped().eigenvalues
