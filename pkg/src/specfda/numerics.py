"""Dense symmetric eigensolver contract, matrix functions and quadrature on [0, 1]."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .constants import NEG_EIG_REL_TOL, SYMMETRY_TOL
from .errors import BadSize, NegativeSpectrum, NonFinite, NonSymmetric, ShapeMismatch


@dataclass(frozen=True)
class SymEigen:
    """Eigendecomposition ``A = V diag(d) V^T`` with ``d`` sorted descending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        V = self.eigenvectors
        return (V * self.eigenvalues) @ V.T

    def clamped(self) -> "SymEigen":
        """Zero out round-off negatives; raise on genuinely negative eigenvalues.

        The cut-off is ``NEG_EIG_REL_TOL * trace`` where the trace is the sum of
        the eigenvalues.
        """
        d = self.eigenvalues
        scale = max(float(np.sum(np.abs(d))), np.finfo(float).tiny)
        tol = NEG_EIG_REL_TOL * scale
        if d.size and d[-1] < -tol:
            raise NegativeSpectrum(
                f"smallest eigenvalue {d[-1]:.3e} below -{tol:.3e}; matrix is not PSD"
            )
        return SymEigen(np.where(d < 0.0, 0.0, d), self.eigenvectors)


def _check_square_symmetric(A: np.ndarray) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ShapeMismatch(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NonFinite("matrix has NaN or Inf entries")
    if A.size and np.max(np.abs(A - A.T)) > SYMMETRY_TOL:
        raise NonSymmetric(f"max asymmetry {np.max(np.abs(A - A.T)):.3e}")
    return A


def sym_eigen(A: np.ndarray) -> SymEigen:
    A = _check_square_symmetric(A)
    # LAPACK reads one triangle only; symmetrize so both triangles agree exactly.
    d, V = np.linalg.eigh(0.5 * (A + A.T))
    return SymEigen(d[::-1].copy(), V[:, ::-1].copy())


def apply_matrix_function(eig: SymEigen, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Return ``V diag(f(d)) V^T`` for the decomposition ``eig``."""
    fd = np.asarray(f(eig.eigenvalues), dtype=float)
    if fd.shape != eig.eigenvalues.shape:
        fd = np.broadcast_to(fd, eig.eigenvalues.shape)
    if not np.all(np.isfinite(fd)):
        raise NonFinite("matrix function is not finite on the spectrum")
    V = eig.eigenvectors
    return (V * fd) @ V.T


def apply_matrix_function_to(eig: SymEigen, f, v: np.ndarray) -> np.ndarray:
    """``f(A) @ v`` without forming ``f(A)``."""
    fd = np.asarray(f(eig.eigenvalues), dtype=float)
    if not np.all(np.isfinite(fd)):
        raise NonFinite("matrix function is not finite on the spectrum")
    V = eig.eigenvectors
    return V @ (fd * (V.T @ v))


@dataclass(frozen=True)
class Grid1D:
    nodes: np.ndarray
    weights: np.ndarray

    def __len__(self) -> int:
        return self.nodes.size


def trapezoid_grid(n_nodes: int) -> Grid1D:
    """Uniform grid on [0, 1] with composite trapezoid weights."""
    if int(n_nodes) != n_nodes or n_nodes < 2:
        raise BadSize(f"need at least 2 nodes, got {n_nodes}")
    n_nodes = int(n_nodes)
    h = 1.0 / (n_nodes - 1)
    nodes = np.linspace(0.0, 1.0, n_nodes)
    weights = np.full(n_nodes, h)
    weights[0] = weights[-1] = h / 2
    return Grid1D(nodes, weights)


def l2_norm_grid(values: np.ndarray, grid: Grid1D) -> float:
    values = np.asarray(values, dtype=float)
    if values.shape != grid.nodes.shape:
        raise ShapeMismatch(f"values {values.shape} vs grid {grid.nodes.shape}")
    return float(np.sqrt(np.sum(grid.weights * values**2)))


def l2_norm_grid2(values: np.ndarray, grid: Grid1D) -> float:
    values = np.asarray(values, dtype=float)
    n = grid.nodes.size
    if values.shape != (n, n):
        raise ShapeMismatch(f"values {values.shape} vs grid {(n, n)}")
    w = grid.weights
    return float(np.sqrt(w @ (values**2) @ w))
