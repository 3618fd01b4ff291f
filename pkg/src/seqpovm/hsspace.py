"""Hilbert-Schmidt space conventions.

Operators on a d-dimensional space are flattened by row stacking, so the
matrix element ``x[i, j]`` lands at flat index ``i * d + j``. With this
convention the map ``rho -> X @ rho @ Y`` becomes the d**2 x d**2 matrix
``kron(X, Y.T)``, and a Kraus operator ``M`` contributes ``kron(M, M.conj())``
to a channel matrix.
"""
from __future__ import annotations

import numpy as np

from .errors import StructuralError

#: default absolute tolerance for closed-form constructions at small d
ATOL = 1e-12


def as_square(X, name: str = "matrix") -> np.ndarray:
    """Return ``X`` as a finite complex square array or raise StructuralError."""
    A = np.asarray(X, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise StructuralError(f"{name} must be a non-empty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise StructuralError(f"{name} has non-finite entries")
    return A


def _same_dim(X: np.ndarray, Y: np.ndarray) -> None:
    if X.shape != Y.shape:
        raise StructuralError(f"dimension mismatch: {X.shape} vs {Y.shape}")


def vectorize(X) -> np.ndarray:
    """Row-stack a square matrix into a vector of length d**2."""
    return as_square(X).reshape(-1).copy()


def devectorize(v) -> np.ndarray:
    """Inverse of :func:`vectorize`."""
    v = np.asarray(v, dtype=complex).reshape(-1)
    d = int(round(np.sqrt(v.size)))
    if d * d != v.size or d == 0:
        raise StructuralError(f"vector length {v.size} is not a perfect square")
    return v.reshape(d, d).copy()


def sandwich_matrix(X, Y) -> np.ndarray:
    """HS-space matrix of the superoperator ``rho -> X rho Y``."""
    X = as_square(X, "X")
    Y = as_square(Y, "Y")
    _same_dim(X, Y)
    return np.kron(X, Y.T)


def kraus_superoperator(M) -> np.ndarray:
    """HS-space matrix of ``rho -> M rho M^dagger``, i.e. ``M (x) M*``."""
    M = as_square(M, "M")
    return np.kron(M, M.conj())


def hs_inner(Y, X) -> complex:
    """Hilbert-Schmidt inner product ``Tr(Y^dagger X)``."""
    Y = as_square(Y, "Y")
    X = as_square(X, "X")
    _same_dim(X, Y)
    return complex(np.vdot(Y.reshape(-1), X.reshape(-1)))


def max_abs(A) -> float:
    """Max-absolute-entry norm, used for every convergence statement."""
    A = np.asarray(A)
    return float(np.max(np.abs(A))) if A.size else 0.0


def is_unitary(U, tol: float = 1e-9) -> bool:
    U = np.asarray(U, dtype=complex)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        return False
    return max_abs(U.conj().T @ U - np.eye(U.shape[0])) < tol
