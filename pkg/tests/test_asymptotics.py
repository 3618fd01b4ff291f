import numpy as np
import pytest
from scipy.stats import unitary_group

from conftest import random_commuting_set, random_density_matrix
from seqpovm.ancilla import bosonic_modular_scheme
from seqpovm.asymptotics import (
    asymptotic_channel,
    channel_matrix,
    channel_power,
    channel_report,
    classify_hs_points,
    distance_to_asymptote,
    spectral_gap,
    trace_preservation_residual,
)
from seqpovm.errors import NotApplicableError
from seqpovm.hsspace import max_abs, vectorize
from seqpovm.povm import MeasurementSet, decompose, nonselective


def test_channel_matrix_projective(projective_pair):
    assert np.array_equal(channel_matrix(projective_pair), np.diag([1, 0, 0, 1]))


def test_channel_matrix_unitary():
    t1, t2 = 0.4, -1.1
    Phi = channel_matrix(MeasurementSet([np.diag(np.exp(1j * np.array([t1, t2])))]))
    expect = np.diag([1, np.exp(1j * (t1 - t2)), np.exp(1j * (t2 - t1)), 1])
    assert max_abs(Phi - expect) < 1e-15


def test_channel_matrix_weak_pair(weak_pair):
    Phi = channel_matrix(weak_pair)
    assert Phi[1, 1] == pytest.approx(np.cos(0.3), abs=1e-15)
    assert Phi[2, 2] == pytest.approx(np.cos(0.3), abs=1e-15)
    assert Phi[0, 0] == pytest.approx(1) and Phi[3, 3] == pytest.approx(1)


@pytest.mark.parametrize("seed", range(5))
def test_channel_matches_kraus_sum(seed):
    rng = np.random.default_rng(seed)
    mset, _, _ = random_commuting_set(rng, 3, 3, 2)
    Phi = channel_matrix(mset)
    assert trace_preservation_residual(Phi) < 1e-12
    rho = random_density_matrix(rng, 3)
    assert max_abs(Phi @ vectorize(rho) - vectorize(nonselective(mset, rho))) < 1e-12


def test_channel_power_projective_idempotent(projective_pair):
    dec = decompose(projective_pair)
    for m in (1, 2, 7):
        assert np.array_equal(channel_power(dec, m), np.diag([1, 0, 0, 1]))


def test_channel_power_weak_pair(weak_pair):
    P = channel_power(decompose(weak_pair), 50)
    assert P[1, 1] == pytest.approx(np.cos(0.3) ** 50, abs=1e-12)
    assert P[1, 1] == pytest.approx(0.10181653147983688, abs=1e-12)


def test_channel_power_unitary_modulus():
    U = unitary_group.rvs(3, random_state=3)
    dec = decompose(MeasurementSet([U]))
    for m in (1, 5, 40):
        ev = np.linalg.eigvals(channel_power(dec, m))
        assert np.allclose(np.abs(ev), 1, atol=1e-10)


def test_channel_power_rejects_zero_rounds(weak_pair):
    with pytest.raises(ValueError):
        channel_power(decompose(weak_pair), 0)


@pytest.mark.parametrize("seed", range(8))
def test_channel_power_matches_dense_power(seed):
    rng = np.random.default_rng(50 + seed)
    d = int(rng.integers(2, 5))
    mset, _, _ = random_commuting_set(rng, d, 2, int(rng.integers(1, d + 1)))
    dec = decompose(mset)
    Phi = channel_matrix(mset)
    for m in (1, 2, 5, 16):
        assert max_abs(channel_power(dec, m) - np.linalg.matrix_power(Phi, m)) < 1e-10
        assert trace_preservation_residual(channel_power(dec, m)) < 1e-10


def test_classify_projective(projective_pair):
    cls = classify_hs_points(decompose(projective_pair))
    assert cls.fixed == [(0, 0), (1, 1)]
    assert cls.rotating == []
    assert [(i, j) for i, j, _ in cls.decaying] == [(0, 1), (1, 0)]
    assert all(g == 0 for _, _, g in cls.decaying)


def test_classify_unitary():
    cls = classify_hs_points(decompose(MeasurementSet([np.diag(np.exp(1j * np.array([0.2, 0.9])))])))
    assert cls.fixed == [(0, 0), (1, 1)]
    assert [(i, j) for i, j, _ in cls.rotating] == [(0, 1), (1, 0)]
    assert cls.rotating[0][2] == pytest.approx(-0.7)
    assert cls.decaying == []


def test_classify_bosonic_pattern():
    _, mset = bosonic_modular_scheme(2, 8)
    dec = decompose(mset)
    cls = classify_hs_points(dec)
    assert len(cls.fixed) + len(cls.rotating) + len(cls.decaying) == 64
    # omega_n = n pi / 2: same group iff n = n' mod 2, same phase iff n = n' mod 4
    assert set(cls.fixed) == {(i, j) for i in range(8) for j in range(8) if (i - j) % 4 == 0}
    assert {(i, j) for i, j, _ in cls.rotating} == {
        (i, j) for i in range(8) for j in range(8) if (i - j) % 4 == 2
    }
    assert all(abs(abs(p) - np.pi) < 1e-12 for _, _, p in cls.rotating)
    assert {(i, j) for i, j, _ in cls.decaying} == {(i, j) for i in range(8) for j in range(8) if (i - j) % 2}


def test_asymptotic_channel_zero_phases_is_idempotent(weak_pair):
    dec = decompose(weak_pair)
    A = asymptotic_channel(dec)
    assert max_abs(A @ A - A) < 1e-15
    assert np.array_equal(A, np.diag([1, 0, 0, 1]))


def test_asymptotic_channel_parity_even_rounds():
    scheme, mset = bosonic_modular_scheme(1, 8)
    dec = decompose(mset)
    P = scheme.class_projectors()
    expect = sum(np.kron(Pk, Pk.conj()) for Pk in P)
    for m in (2, 4, 10):
        assert max_abs(asymptotic_channel(dec, m) - expect) < 1e-12


def test_asymptotic_channel_odd_vs_even():
    _, mset = bosonic_modular_scheme(2, 8)
    dec = decompose(mset)
    U = dec.phased_projectors.sum(axis=0)
    even, odd = asymptotic_channel(dec, 2), asymptotic_channel(dec, 3)
    assert max_abs(odd - even) > 0.5
    assert max_abs(odd - np.kron(U, U.conj()) @ even) < 1e-12


def test_spectral_gap_values(weak_pair, projective_pair):
    assert spectral_gap(decompose(weak_pair)) == pytest.approx(np.cos(0.3), abs=1e-15)
    assert spectral_gap(decompose(projective_pair)) == 0
    _, mset = bosonic_modular_scheme(2, 8)
    # representatives n = 0 and n = 1 differ by omega = pi/2, overlap cos(pi/2)
    assert spectral_gap(decompose(mset)) == pytest.approx(0, abs=1e-15)
    with pytest.raises(NotApplicableError):
        spectral_gap(decompose(MeasurementSet([np.eye(2)])))


@pytest.mark.parametrize("seed", range(20))
def test_convergence_bound(seed):
    rng = np.random.default_rng(300 + seed)
    d = int(rng.integers(2, 5))
    s = int(rng.integers(2, d + 1))
    mset, _, _ = random_commuting_set(rng, d, int(rng.integers(2, 4)), s)
    dec = decompose(mset)
    g = spectral_gap(dec)
    for m in (1, 3, 10, 50, 200):
        assert distance_to_asymptote(dec, m) <= g**m + 1e-12


def test_unitary_mixing_leaves_channel_unchanged(weak_pair):
    c, s = np.cos(0.7), np.sin(0.7)
    T = np.array([[c, -1j * s], [-1j * s, c]])
    mixed = MeasurementSet(np.einsum("ab,bij->aij", T, weak_pair.operators))
    assert max_abs(channel_matrix(mixed) - channel_matrix(weak_pair)) < 1e-15


def test_channel_report_keys(weak_pair):
    rep = channel_report(decompose(weak_pair), 50)
    assert rep["m"] == 50
    assert rep["gap"] == pytest.approx(np.cos(0.3))
    assert rep["distance_to_asymptote"] == pytest.approx(np.cos(0.3) ** 50, abs=1e-12)
    assert rep["classification"]["fixed"] == [[0, 0], [1, 1]]
    single = channel_report(decompose(MeasurementSet([np.eye(2)])), 3)
    assert single["gap"] is None and single["distance_to_asymptote"] == 0
