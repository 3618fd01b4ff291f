"""Two-outcome measurement pairs mediated by an ancilla qubit.

The ancilla couples to the target through a pure-dephasing Hamiltonian, so a
round of "rotate, evolve, rotate, read out" leaves the target with two
operators that are diagonal in the eigenbasis of the accumulated phases
``omega_j``. Only those phases enter; the coupling itself is never integrated.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import StructuralError
from .hsspace import is_unitary
from .povm import MeasurementSet

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

DEGENERACY_TOL = 1e-9


@dataclass(frozen=True)
class DephasingScheme:
    spectrum: tuple[float, ...]
    phi1: float = 0.0
    phi2: float = 0.0

    def __post_init__(self):
        spec = tuple(float(w) for w in np.atleast_1d(self.spectrum))
        if not spec:
            raise StructuralError("spectrum needs at least one phase")
        if not all(math.isfinite(w) for w in spec):
            raise StructuralError("spectrum has non-finite entries")
        object.__setattr__(self, "spectrum", spec)

    @classmethod
    def from_dphi(cls, spectrum, dphi: float) -> "DephasingScheme":
        return cls(tuple(spectrum), phi1=float(dphi), phi2=0.0)

    @property
    def dphi(self) -> float:
        return self.phi1 - self.phi2

    @property
    def d(self) -> int:
        return len(self.spectrum)

    def omegas(self) -> np.ndarray:
        return np.asarray(self.spectrum, dtype=float)


def measurement_coefficients(scheme: DephasingScheme, swap_labels: bool = False) -> np.ndarray:
    """2 x d coefficient rows ``(e^{i w} -/+ e^{i(dphi - w)}) / 2`` for (M_+, M_-)."""
    w = scheme.omegas()
    a = np.exp(1j * w)
    b = np.exp(1j * (scheme.dphi - w))
    C = np.stack([(a - b) / 2, (a + b) / 2])
    return C[::-1].copy() if swap_labels else C


def build_measurement_pair(scheme: DephasingScheme, swap_labels: bool = False) -> MeasurementSet:
    """Diagonal measurement pair ``(M_+, M_-)`` of the standard ancilla protocol.

    ``M_+`` carries the minus sign. ``swap_labels`` exchanges the two outcomes,
    since which ancilla outcome is called "+" is a convention.
    """
    C = measurement_coefficients(scheme, swap_labels)
    return MeasurementSet(np.stack([np.diag(row) for row in C]))


def rotation(phi: float, theta: float) -> np.ndarray:
    """Ancilla rotation ``exp(-i (cos phi X + sin phi Y) theta / 2)``."""
    n = math.cos(phi) * SIGMA_X + math.sin(phi) * SIGMA_Y
    return math.cos(theta / 2) * np.eye(2) - 1j * math.sin(theta / 2) * n


def standard_ancilla_settings(phi1: float, phi2: float) -> tuple[np.ndarray, np.ndarray]:
    """Preparation ``R_phi1(pi/2)|+>`` and readout basis ``R_phi2(-pi/2)|+/->``.

    The readout basis is returned as a unitary whose columns are ``|v_+>`` and ``|v_->``.
    """
    plus = np.array([1, 0], dtype=complex)
    return rotation(phi1, math.pi / 2) @ plus, rotation(phi2, -math.pi / 2)


def general_measurement_pair(spectrum, ancilla_prep, readout_basis, tol: float = 1e-9) -> MeasurementSet:
    """Measurement operators ``M_alpha = <v_alpha| U |psi>`` for arbitrary ancilla settings.

    Parameters
    ----------
    spectrum : sequence of float
        Accumulated phases ``omega_j``.
    ancilla_prep : length-2 complex
        Ancilla preparation in the sigma_z eigenbasis ``(|+>, |->)``.
    readout_basis : 2 x 2 unitary
        Columns are the readout states ``|v_+>``, ``|v_->``.
    """
    psi = np.asarray(ancilla_prep, dtype=complex).reshape(-1)
    V = np.asarray(readout_basis, dtype=complex)
    if psi.shape != (2,) or abs(np.linalg.norm(psi) - 1) > tol:
        raise StructuralError("ancilla preparation must be a normalized 2-vector")
    if not is_unitary(V, tol):
        raise StructuralError("readout basis must be a 2x2 unitary")
    w = np.asarray(spectrum, dtype=float)
    amp = V.conj().T @ psi
    amp_z = V.conj().T @ (SIGMA_Z @ psi)
    rows = amp[:, None] * np.cos(w)[None, :] + 1j * amp_z[:, None] * np.sin(w)[None, :]
    return MeasurementSet(np.stack([np.diag(row) for row in rows]))


def polarization_table(scheme: DephasingScheme) -> np.ndarray:
    """Per-eigenstate polarization ``|c_{-,j}|^2 - |c_{+,j}|^2`` (equals ``cos(2 w_j - dphi)``)."""
    C = measurement_coefficients(scheme)
    return np.abs(C[1]) ** 2 - np.abs(C[0]) ** 2


@dataclass(frozen=True)
class Degeneracy:
    j: int
    k: int
    case: str  # "I" or "II"
    n: int

    @property
    def note(self) -> str:
        if self.case == "I":
            return "identical typical sequences; choose a different dphi to separate the projections"
        sign = "+" if self.n % 2 == 0 else "-"
        return f"induces P_{self.j} {sign} P_{self.k}"

    def to_dict(self) -> dict:
        return {"j": self.j, "k": self.k, "case": self.case, "n": self.n, "note": self.note}


@dataclass
class DegeneracyRecord:
    pairs: list[Degeneracy] = field(default_factory=list)

    def __len__(self):
        return len(self.pairs)

    def case(self, name: str) -> list[Degeneracy]:
        return [p for p in self.pairs if p.case == name]


def _integer_multiple_of_pi(x: float, n_max: int, tol: float):
    n = int(round(x / math.pi))
    if abs(n) <= n_max and abs(x - n * math.pi) < tol:
        return n
    return None


def degeneracy_analysis(scheme: DephasingScheme, tol: float = DEGENERACY_TOL) -> DegeneracyRecord:
    """Find eigenstate pairs with equal polarization and name the mechanism.

    Case II (``w_j - w_k = n pi``) is reported in preference to case I
    (``w_j + w_k = dphi + n pi``) when both hold, because the pair then lies in
    one canonical group.
    """
    w = scheme.omegas()
    n_max = 4 * math.ceil(float(np.max(np.abs(w))) / math.pi) + 2
    record = DegeneracyRecord()
    for j in range(len(w)):
        for k in range(j + 1, len(w)):
            n = _integer_multiple_of_pi(w[j] - w[k], n_max, tol)
            if n is not None:
                record.pairs.append(Degeneracy(j, k, "II", n))
                continue
            n = _integer_multiple_of_pi(w[j] + w[k] - scheme.dphi, n_max, tol)
            if n is not None:
                record.pairs.append(Degeneracy(j, k, "I", n))
    return record


# -- bosonic modular excitation numbers ------------------------------------------


@dataclass(frozen=True, eq=False)
class BosonicModularScheme:
    """Dispersively coupled bosonic mode truncated to ``truncation`` Fock states.

    For N >= 2 the evolution time folds into ``omega_n = n pi / N``, splitting the
    unit circle into 2N pieces and resolving ``n mod N``. N = 1 is the parity
    measurement and uses ``omega_n = n pi / 2``.
    """

    N: int
    truncation: int
    dphi: float

    @property
    def phase_step(self) -> float:
        return math.pi / 2 if self.N == 1 else math.pi / self.N

    @property
    def n_classes(self) -> int:
        """Number of resolved modular classes (2 for parity, otherwise N)."""
        return 2 if self.N == 1 else self.N

    @property
    def spectrum(self) -> np.ndarray:
        return np.arange(self.truncation) * self.phase_step

    @property
    def modular_projectors(self) -> np.ndarray:
        """``P_{2N}^l`` for l in [0, 2N) on the truncated space."""
        n = np.arange(self.truncation)
        return np.stack([np.diag((n % (2 * self.N) == l).astype(complex)) for l in range(2 * self.N)])

    def class_projectors(self) -> np.ndarray:
        """Projectors onto the resolved classes ``n mod n_classes``."""
        n = np.arange(self.truncation)
        c = self.n_classes
        return np.stack([np.diag((n % c == k).astype(complex)) for k in range(c)])

    def dephasing_scheme(self) -> DephasingScheme:
        return DephasingScheme.from_dphi(self.spectrum, self.dphi)

    def class_polarizations(self) -> np.ndarray:
        return polarization_table(self.dephasing_scheme())[: self.n_classes]


def bosonic_modular_scheme(N: int, truncation: int | None = None, dphi: float | None = None):
    """Build the bosonic scheme and its measurement pair.

    ``truncation`` defaults to ``8 N``; ``dphi`` defaults to :func:`optimal_dphi`.
    Returns ``(scheme, measurement_set)``.
    """
    if int(N) != N or N < 1:
        raise StructuralError("N must be a positive integer")
    N = int(N)
    if truncation is None:
        truncation = 8 * N
    if truncation < 2 * N:
        raise StructuralError(f"truncation {truncation} < 2N = {2 * N} leaves modular classes empty")
    if dphi is None:
        dphi = optimal_dphi(N)[0]
    scheme = BosonicModularScheme(N, int(truncation), float(dphi))
    return scheme, build_measurement_pair(scheme.dephasing_scheme())


def optimal_dphi(N: int) -> tuple[float, float]:
    """Suggested phase difference and the smallest polarization gap it achieves.

    Returns ``0`` for N = 1 and ``pi / (2N)`` otherwise, together with
    ``min_{j != k} |df_j - df_k|`` over the resolved classes. No global
    optimality is claimed.
    """
    if int(N) != N or N < 1:
        raise StructuralError("N must be a positive integer")
    dphi = 0.0 if N == 1 else math.pi / (2 * N)
    df = BosonicModularScheme(int(N), 2 * int(N), dphi).class_polarizations()
    gaps = [abs(df[j] - df[k]) for j in range(len(df)) for k in range(j + 1, len(df))]
    return dphi, float(min(gaps))
