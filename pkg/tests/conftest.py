import numpy as np
import pytest
from scipy.stats import unitary_group

from seqpovm.ancilla import DephasingScheme, build_measurement_pair
from seqpovm.povm import MeasurementSet

ACCEPTANCE_LINES = []


def random_unit_vectors(rng, r, n):
    z = rng.normal(size=(r, n)) + 1j * rng.normal(size=(r, n))
    return z / np.linalg.norm(z, axis=0)


def random_commuting_set(rng, d, r, s=None, phased=True, rotate=True):
    """Random normal commuting family with a planted group structure.

    Returns ``(mset, basis, C)`` with ``M_alpha = basis diag(C[alpha]) basis^dagger``.
    """
    s = d if s is None else s
    reps = random_unit_vectors(rng, r, s)
    labels = np.concatenate([np.arange(s), rng.integers(0, s, size=d - s)])
    rng.shuffle(labels)
    phases = rng.uniform(-np.pi, np.pi, size=d) if phased else np.zeros(d)
    C = reps[:, labels] * np.exp(1j * phases)
    V = unitary_group.rvs(d, random_state=rng) if rotate else np.eye(d)
    ops = np.einsum("ij,aj,kj->aik", V, C, V.conj())
    return MeasurementSet(ops), V, C


def random_density_matrix(rng, d):
    A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = A @ A.conj().T
    return rho / np.trace(rho)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def projective_pair():
    return MeasurementSet([np.diag([0, 1j]), np.diag([1, 0])])


@pytest.fixture
def weak_pair():
    return build_measurement_pair(DephasingScheme.from_dphi([0.0, 0.3], 0.0))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
