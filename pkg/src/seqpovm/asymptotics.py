"""Channel matrices of commuting normal measurement sets and their large-m limit.

In the common eigenbasis the channel is diagonal in HS space: the basis
element ``|ij>>`` has eigenvalue ``c_j^dagger c_i``. Powers are therefore
scalar powers, and everything here is computed in that basis and rotated back
with ``K = V (x) V*``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotApplicableError
from .hsspace import max_abs
from .povm import TOL, CanonicalDecomposition, MeasurementSet, require_valid, wrap_phase


def channel_matrix(mset: MeasurementSet, tol: float = TOL) -> np.ndarray:
    """Dense HS-space channel ``sum_alpha M_alpha (x) M_alpha*``."""
    require_valid(mset, tol)
    d = mset.d
    out = np.zeros((d * d, d * d), dtype=complex)
    for M in mset.operators:
        out += np.kron(M, M.conj())
    return out


def trace_preservation_residual(channel: np.ndarray) -> float:
    d = int(round(np.sqrt(channel.shape[0])))
    vid = np.eye(d).reshape(-1)
    return max_abs(vid @ channel - vid)


def _rotate_back(decomp: CanonicalDecomposition, diag: np.ndarray) -> np.ndarray:
    V = decomp.eigen.basis
    flat = diag.reshape(-1)
    if np.array_equal(V, np.eye(V.shape[0])):
        return np.diag(flat)
    K = np.kron(V, V.conj())
    return (K * flat) @ K.conj().T


def _check_rounds(m: int) -> int:
    if int(m) != m or m < 1:
        raise ValueError(f"number of rounds must be a positive integer, got {m}")
    return int(m)


def hs_eigenvalues(decomp: CanonicalDecomposition, m: int = 1) -> np.ndarray:
    """d x d array of ``(c_j^dagger c_i)^m`` in the eigenbasis."""
    m = _check_rounds(m)
    return decomp.eigen.hs_eigenvalues() ** m


def channel_power(decomp: CanonicalDecomposition, m: int) -> np.ndarray:
    """Closed-form ``Phi^m`` from the eigenstructure (no repeated multiplication)."""
    return _rotate_back(decomp, hs_eigenvalues(decomp, m))


def _asymptotic_diagonal(decomp: CanonicalDecomposition, m: int) -> np.ndarray:
    lab = decomp.group_of()
    same = lab[:, None] == lab[None, :]
    if decomp.all_phases_zero:
        return same.astype(complex)
    dphi = decomp.phases[:, None] - decomp.phases[None, :]
    return np.where(same, np.exp(1j * m * dphi), 0)


def asymptotic_channel(decomp: CanonicalDecomposition, m: int = 1) -> np.ndarray:
    """``sum_k (P~_k (x) P~_k*)^m``; reduces to ``sum_k P_k (x) P_k`` when all phases vanish."""
    m = _check_rounds(m)
    return _rotate_back(decomp, _asymptotic_diagonal(decomp, m))


def spectral_gap(decomp: CanonicalDecomposition) -> float:
    """Largest inter-group overlap ``max_{p != q} |c~_p^dagger c~_q|``."""
    if decomp.s < 2:
        raise NotApplicableError("a single group has no spectral gap (the channel is unitary)")
    G = np.abs(decomp.representative_overlaps())
    np.fill_diagonal(G, 0.0)
    return float(G.max())


def distance_to_asymptote(decomp: CanonicalDecomposition, m: int) -> float:
    """Max-entry distance between ``Phi^m`` and its asymptotic form."""
    m = _check_rounds(m)
    diff = hs_eigenvalues(decomp, m) - _asymptotic_diagonal(decomp, m)
    return max_abs(_rotate_back(decomp, diff))


@dataclass
class HsPointClassification:
    fixed: list[tuple[int, int]]
    rotating: list[tuple[int, int, float]]
    decaying: list[tuple[int, int, float]]

    def to_dict(self) -> dict:
        return {
            "fixed": [list(p) for p in self.fixed],
            "rotating": [list(p) for p in self.rotating],
            "decaying": [list(p) for p in self.decaying],
        }


def classify_hs_points(decomp: CanonicalDecomposition, tol: float = TOL) -> HsPointClassification:
    """Split the d**2 HS eigenvectors ``|ij>>`` into fixed, rotating and decaying points.

    Indices refer to the common eigenbasis. Rotating points carry the phase
    ``phi_i - phi_j``; decaying points carry ``|c~_p^dagger c~_q|``.
    """
    lab = decomp.group_of()
    overlaps = np.abs(decomp.representative_overlaps())
    fixed, rotating, decaying = [], [], []
    for i in range(decomp.d):
        for j in range(decomp.d):
            p, q = lab[i], lab[j]
            if p == q:
                phase = wrap_phase(decomp.phases[i] - decomp.phases[j])
                if abs(phase) < tol:
                    fixed.append((i, j))
                else:
                    rotating.append((i, j, phase))
            else:
                decaying.append((i, j, float(overlaps[p, q])))
    return HsPointClassification(fixed, rotating, decaying)


def channel_report(decomp: CanonicalDecomposition, m: int) -> dict:
    """Summary emitted by the ``channel`` CLI subcommand."""
    try:
        gap = spectral_gap(decomp)
    except NotApplicableError:
        gap = None
    return {
        "m": int(m),
        "distance_to_asymptote": distance_to_asymptote(decomp, m),
        "gap": gap,
        "classification": classify_hs_points(decomp).to_dict(),
    }
