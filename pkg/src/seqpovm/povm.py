"""Measurement-operator sets with normal, commuting operators.

A set ``{M_alpha}`` of r operators on a d-dimensional system is diagonal in a
common orthonormal basis ``{|i>}``::

    M_alpha = sum_i C[alpha, i] |i><i|

Completeness forces every column ``C[:, i]`` to be a unit vector. Columns that
agree up to a phase are grouped together; each group ``A_k`` defines a
projector ``P_k`` and a phased unitary ``P~_k = sum_{j in A_k} e^{i phi_j}|j><j|``
so that ``M_alpha = sum_k C~[alpha, k] P~_k``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AmbiguityError,
    DiagonalizationError,
    InvalidStateError,
    StructuralError,
    ValidationError,
    ZeroProbabilityError,
)
from .hsspace import as_square, is_unitary, max_abs

TOL = 1e-9
TOL_GROUP = 1e-7
P_FLOOR = 1e-12
DEFAULT_SEED = 20220101


@dataclass(frozen=True, eq=False)
class MeasurementSet:
    """r measurement operators on a d-dimensional system, stored as an (r, d, d) array."""

    operators: np.ndarray

    def __post_init__(self):
        ops = self.operators
        if isinstance(ops, np.ndarray) and ops.ndim == 3:
            arr = ops.astype(complex, copy=True)
        else:
            ops = list(ops)
            if not ops:
                raise StructuralError("a measurement set needs at least one operator")
            mats = [as_square(M, f"operator {a}") for a, M in enumerate(ops)]
            if len({M.shape for M in mats}) != 1:
                raise StructuralError("operators have mismatched dimensions")
            arr = np.stack(mats)
        if arr.shape[0] == 0 or arr.shape[1] != arr.shape[2] or arr.shape[1] == 0:
            raise StructuralError(f"bad operator array shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise StructuralError("operators have non-finite entries")
        arr.setflags(write=False)
        object.__setattr__(self, "operators", arr)

    @property
    def r(self) -> int:
        return self.operators.shape[0]

    @property
    def d(self) -> int:
        return self.operators.shape[1]

    def __len__(self):
        return self.r

    def __getitem__(self, alpha):
        return self.operators[alpha]

    def __iter__(self):
        return iter(self.operators)


@dataclass
class ValidationReport:
    completeness: float
    normality: float
    commutativity: float
    tol: float

    @property
    def completeness_ok(self) -> bool:
        return self.completeness < self.tol

    @property
    def normality_ok(self) -> bool:
        return self.normality < self.tol

    @property
    def commutativity_ok(self) -> bool:
        return self.commutativity < self.tol

    @property
    def ok(self) -> bool:
        return self.completeness_ok and self.normality_ok and self.commutativity_ok

    def failures(self) -> list[str]:
        names = []
        if not self.completeness_ok:
            names.append("completeness")
        if not self.normality_ok:
            names.append("normality")
        if not self.commutativity_ok:
            names.append("commutativity")
        return names

    def to_dict(self) -> dict:
        return {
            "tol": self.tol,
            "completeness": {"residual": self.completeness, "pass": self.completeness_ok},
            "normality": {"residual": self.normality, "pass": self.normality_ok},
            "commutativity": {"residual": self.commutativity, "pass": self.commutativity_ok},
            "pass": self.ok,
        }


def validate(mset: MeasurementSet, tol: float = TOL) -> ValidationReport:
    """Max-entry residuals of completeness, normality and pairwise commutativity."""
    if not isinstance(mset, MeasurementSet):
        mset = MeasurementSet(mset)
    ops = mset.operators
    adj = ops.conj().transpose(0, 2, 1)
    completeness = max_abs(np.einsum("aij,ajk->ik", adj, ops) - np.eye(mset.d))
    normality = max(max_abs(M @ Md - Md @ M) for M, Md in zip(ops, adj))
    commutativity = 0.0
    for a in range(mset.r):
        for b in range(a + 1, mset.r):
            commutativity = max(commutativity, max_abs(ops[a] @ ops[b] - ops[b] @ ops[a]))
    return ValidationReport(completeness, normality, commutativity, tol)


def require_valid(mset: MeasurementSet, tol: float = TOL) -> ValidationReport:
    report = validate(mset, tol)
    if not report.ok:
        raise ValidationError(
            "measurement set fails " + ", ".join(report.failures()), report=report
        )
    return report


def density_matrix(state, tol: float = TOL) -> np.ndarray:
    """Coerce a state vector or matrix into a validated density matrix.

    A 1-d input is treated as a ket and normalized; a 2-d input must already
    be Hermitian, unit-trace and positive semidefinite within ``tol``.
    """
    arr = np.asarray(state, dtype=complex)
    if arr.ndim == 1:
        norm = np.linalg.norm(arr)
        if arr.size == 0 or not np.isfinite(norm) or norm == 0:
            raise InvalidStateError("state vector must be finite and non-zero")
        psi = arr / norm
        return np.outer(psi, psi.conj())
    rho = as_square(arr, "density matrix")
    if max_abs(rho - rho.conj().T) > tol:
        raise InvalidStateError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > tol:
        raise InvalidStateError(f"density matrix has trace {np.trace(rho).real:.6g}")
    rho = (rho + rho.conj().T) / 2
    if np.linalg.eigvalsh(rho).min() < -tol:
        raise InvalidStateError("density matrix has negative eigenvalues")
    return rho


# -- simultaneous diagonalization ------------------------------------------------


@dataclass(frozen=True, eq=False)
class EigenStructure:
    """Common eigenbasis (columns of ``basis``) and the r x d coefficient matrix C."""

    basis: np.ndarray
    coefficients: np.ndarray

    @property
    def d(self) -> int:
        return self.basis.shape[0]

    @property
    def r(self) -> int:
        return self.coefficients.shape[0]

    def columns(self) -> list[np.ndarray]:
        return [self.coefficients[:, i] for i in range(self.d)]

    def hs_eigenvalues(self) -> np.ndarray:
        """d x d array whose (i, j) entry is ``c_j^dagger c_i``."""
        C = self.coefficients
        return C.T @ C.conj()

    def operators(self) -> np.ndarray:
        V = self.basis
        return np.einsum("ij,aj,kj->aik", V, self.coefficients, V.conj())


def _is_scalar_family(ops: np.ndarray, tol: float) -> bool:
    k = ops.shape[1]
    for M in ops:
        if max_abs(M - np.trace(M) / k * np.eye(k)) > tol:
            return False
    return True


def _hermitian_combination(ops: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    x = rng.uniform(-1.0, 1.0, size=ops.shape[0])
    y = rng.uniform(-1.0, 1.0, size=ops.shape[0])
    adj = ops.conj().transpose(0, 2, 1)
    herm = (ops + adj) / 2
    antiherm = (ops - adj) / 2j
    H = np.einsum("a,aij->ij", x, herm) + np.einsum("a,aij->ij", y, antiherm)
    return (H + H.conj().T) / 2


def _refine(ops: np.ndarray, rng: np.random.Generator, tol: float, depth: int) -> np.ndarray:
    k = ops.shape[1]
    if k == 1 or _is_scalar_family(ops, tol):
        return np.eye(k, dtype=complex)
    if depth > 64:
        raise DiagonalizationError("degeneracy refinement did not terminate")
    H = _hermitian_combination(ops, rng)
    w, V = np.linalg.eigh(H)
    scale = max(1.0, float(np.max(np.abs(w))))
    cluster_tol = 1e-6 * scale
    blocks = []
    start = 0
    for i in range(1, k + 1):
        if i == k or w[i] - w[i - 1] > cluster_tol:
            blocks.append((start, i))
            start = i
    if len(blocks) == 1:
        # the whole space is one cluster: retry with fresh coefficients
        return _refine(ops, rng, tol, depth + 1)
    out = np.zeros((k, k), dtype=complex)
    for lo, hi in blocks:
        Q = V[:, lo:hi]
        if hi - lo == 1:
            out[:, lo:hi] = Q
            continue
        sub = np.einsum("ij,ajk,kl->ail", Q.conj().T, ops, Q)
        out[:, lo:hi] = Q @ _refine(sub, rng, tol, depth + 1)
    return out


def _fix_column_phases(V: np.ndarray) -> np.ndarray:
    V = V.copy()
    for i in range(V.shape[1]):
        mags = np.abs(V[:, i])
        p = int(np.flatnonzero(mags >= mags.max() - 1e-12)[0])
        V[:, i] *= np.exp(-1j * np.angle(V[p, i]))
    return V


def simultaneous_eigenbasis(
    mset: MeasurementSet, tol: float = TOL, seed: int = DEFAULT_SEED
) -> EigenStructure:
    """Diagonalize a commuting normal family in one orthonormal basis.

    Already-diagonal families keep the computational basis (and its ordering).
    Otherwise a random Hermitian combination of the operators' Hermitian and
    anti-Hermitian parts is diagonalized and degenerate eigenspaces are refined
    recursively. The combination coefficients come from ``seed``.
    """
    require_valid(mset, tol)
    ops = mset.operators
    d = mset.d
    off = ops * (1 - np.eye(d))
    if max_abs(off) < tol:
        V = np.eye(d, dtype=complex)
    else:
        rng = np.random.default_rng(seed)
        V = _fix_column_phases(_refine(ops, rng, tol, 0))
    D = np.einsum("ji,ajk,kl->ail", V.conj(), ops, V)
    if max_abs(D * (1 - np.eye(d))) > tol:
        raise DiagonalizationError(
            f"operators not diagonal after refinement (residual {max_abs(D * (1 - np.eye(d))):.3g})"
        )
    C = np.einsum("aii->ai", D).copy()
    norms = np.linalg.norm(C, axis=0)
    if np.max(np.abs(norms - 1)) > tol:
        raise DiagonalizationError("coefficient columns are not unit vectors")
    V.setflags(write=False)
    C.setflags(write=False)
    return EigenStructure(V, C)


# -- canonical decomposition -----------------------------------------------------


def wrap_phase(x: float) -> float:
    """Map a phase to (-pi, pi], snapping values within 1e-12 of -pi to pi."""
    y = float(np.angle(np.exp(1j * x)))
    if y <= -np.pi + 1e-12:
        y = np.pi
    return y


@dataclass(frozen=True, eq=False)
class CanonicalDecomposition:
    """Grouping of coefficient columns into phase-equivalence classes.

    ``groups[k]`` lists eigenbasis indices (ascending), ``representatives[k]``
    is the column of the lowest member, and ``phases[j]`` satisfies
    ``c_j = e^{i phases[j]} representatives[k]`` for ``j`` in group k.
    Projectors are expressed in the original (input) basis.
    """

    eigen: EigenStructure
    groups: tuple[tuple[int, ...], ...]
    representatives: np.ndarray  # r x s
    phases: np.ndarray  # length d
    tol_group: float = TOL_GROUP
    projectors: np.ndarray = field(init=False, repr=False)
    phased_projectors: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        V = self.eigen.basis
        d = self.eigen.d
        P = np.zeros((self.s, d, d), dtype=complex)
        Pt = np.zeros((self.s, d, d), dtype=complex)
        for k, members in enumerate(self.groups):
            idx = list(members)
            Vk = V[:, idx]
            P[k] = Vk @ Vk.conj().T
            Pt[k] = (Vk * np.exp(1j * self.phases[idx])) @ Vk.conj().T
        object.__setattr__(self, "projectors", P)
        object.__setattr__(self, "phased_projectors", Pt)

    @property
    def s(self) -> int:
        return len(self.groups)

    @property
    def d(self) -> int:
        return self.eigen.d

    @property
    def r(self) -> int:
        return self.eigen.r

    @property
    def sizes(self) -> list[int]:
        return [len(g) for g in self.groups]

    def group_of(self) -> np.ndarray:
        """Group label of every eigenbasis index."""
        lab = np.empty(self.d, dtype=int)
        for k, members in enumerate(self.groups):
            lab[list(members)] = k
        return lab

    def representative_overlaps(self) -> np.ndarray:
        """s x s matrix of ``c~_p^dagger c~_q``."""
        R = self.representatives
        return R.conj().T @ R

    def reconstruct(self) -> np.ndarray:
        """Rebuild the operators as ``M_alpha = sum_k C~[alpha, k] P~_k``."""
        return np.einsum("ak,kij->aij", self.representatives, self.phased_projectors)

    @property
    def all_phases_zero(self) -> bool:
        return bool(np.all(np.abs(self.phases) < 1e-12))


def canonical_decomposition(es: EigenStructure, tol_group: float = TOL_GROUP) -> CanonicalDecomposition:
    """Group the columns of C by phase equivalence.

    Columns i and j share a group iff ``|c_i^dagger c_j| > 1 - tol_group``.
    Groups are ordered by their lowest member, which is also the representative.
    Raises AmbiguityError if the relation is not transitive.
    """
    C = np.asarray(es.coefficients)
    d = C.shape[1]
    related = np.abs(C.conj().T @ C) > 1 - tol_group
    assigned = np.full(d, -1)
    groups = []
    for i in range(d):
        if assigned[i] >= 0:
            continue
        members = [j for j in range(i, d) if related[i, j] and assigned[j] < 0]
        for j in members:
            assigned[j] = len(groups)
        groups.append(tuple(members))
    same = assigned[:, None] == assigned[None, :]
    if np.any(same != related):
        i, j = np.argwhere(same != related)[0]
        raise AmbiguityError(
            f"columns {i} and {j} break transitivity of phase equivalence at "
            f"tol_group={tol_group:g} (|overlap| = {abs(np.vdot(C[:, i], C[:, j])):.12f}); "
            "tighten or loosen the tolerance"
        )
    reps = np.stack([C[:, g[0]] for g in groups], axis=1)
    phases = np.zeros(d)
    for k, g in enumerate(groups):
        for j in g[1:]:
            phases[j] = wrap_phase(np.angle(np.vdot(reps[:, k], C[:, j])))
    return CanonicalDecomposition(es, tuple(groups), reps, phases, tol_group)


def decompose(
    mset: MeasurementSet,
    tol: float = TOL,
    tol_group: float = TOL_GROUP,
    seed: int = DEFAULT_SEED,
) -> CanonicalDecomposition:
    """Validate, diagonalize and group in one call."""
    return canonical_decomposition(simultaneous_eigenbasis(mset, tol, seed), tol_group)


# -- mixing and single-shot updates ----------------------------------------------


def apply_unitary_mixing(mset: MeasurementSet, T, tol: float = TOL) -> MeasurementSet:
    """New operators ``M'_alpha = sum_beta T[alpha, beta] M_beta`` (same channel)."""
    T = np.asarray(T, dtype=complex)
    if T.shape != (mset.r, mset.r):
        raise StructuralError(f"mixing matrix must be {mset.r}x{mset.r}, got {T.shape}")
    if not is_unitary(T, tol):
        raise StructuralError("mixing matrix is not unitary")
    return MeasurementSet(np.einsum("ab,bij->aij", T, mset.operators))


def _check_outcome(mset: MeasurementSet, alpha: int) -> None:
    if not 0 <= alpha < mset.r:
        raise IndexError(f"outcome {alpha} out of range for r={mset.r}")


def outcome_probability(mset: MeasurementSet, rho, alpha: int) -> float:
    _check_outcome(mset, alpha)
    M = mset.operators[alpha]
    return float(np.real(np.trace(M @ rho @ M.conj().T)))


def outcome_probabilities(mset: MeasurementSet, rho) -> np.ndarray:
    ops = mset.operators
    return np.real(np.einsum("aij,jk,aik->a", ops, rho, ops.conj()))


def selective_update(mset: MeasurementSet, rho, alpha: int, p_floor: float = P_FLOOR) -> np.ndarray:
    """Post-measurement state ``M rho M^dagger / p`` for outcome ``alpha``."""
    _check_outcome(mset, alpha)
    M = mset.operators[alpha]
    out = M @ rho @ M.conj().T
    p = float(np.real(np.trace(out)))
    if p < p_floor:
        raise ZeroProbabilityError(f"outcome {alpha} has probability {p:.3g} < {p_floor:g}")
    out = out / p
    return (out + out.conj().T) / 2


def nonselective(mset: MeasurementSet, rho) -> np.ndarray:
    """One application of the channel ``sum_alpha M rho M^dagger``."""
    ops = mset.operators
    return np.einsum("aij,jk,alk->il", ops, rho, ops.conj())


def identity_set(d: int) -> MeasurementSet:
    return MeasurementSet(np.eye(d, dtype=complex)[None])
