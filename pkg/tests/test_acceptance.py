"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line that is printed in the pytest terminal
summary (and on stdout with ``-s``).
"""
import contextlib
import math
import time
from fractions import Fraction

import numpy as np
import pytest
from scipy.stats import unitary_group

from conftest import ACCEPTANCE_LINES, random_commuting_set
from seqpovm.ancilla import DephasingScheme, bosonic_modular_scheme, build_measurement_pair
from seqpovm.asymptotics import asymptotic_channel, channel_matrix, channel_power
from seqpovm.hsspace import devectorize, max_abs, vectorize
from seqpovm.povm import MeasurementSet, apply_unitary_mixing, decompose
from seqpovm.trajectory import path_average, run_ensemble
from seqpovm.typicality import (
    count_bound,
    error_bound,
    gaussians_separated,
    separation_bound,
    separation_m_min,
    typical_neighborhood_weights,
)

SYM = [np.array([0.25, 0.75]), np.array([0.75, 0.25])]


@contextlib.contextmanager
def criterion(number, summary):
    start = time.perf_counter()
    try:
        yield
    except BaseException as exc:
        line = f"FAIL criterion {number}: {summary} ({type(exc).__name__}: {exc})"
        ACCEPTANCE_LINES.append(line)
        print(line)
        raise
    line = f"PASS criterion {number}: {summary} [{time.perf_counter() - start:.2f} s]"
    ACCEPTANCE_LINES.append(line)
    print(line)


def weak_pair():
    return build_measurement_pair(DephasingScheme.from_dphi([0.0, 0.3], 0.0))


def test_criterion_1_canonical_structure():
    with criterion(1, "projective pair: two singleton groups, idempotent channel"):
        start = time.perf_counter()
        mset = build_measurement_pair(DephasingScheme.from_dphi([0.0, np.pi / 2], 0.0))
        dec = decompose(mset)
        assert dec.s == 2 and dec.groups == ((0,), (1,))
        one = channel_power(dec, 1)
        for m in (2, 3, 10, 100):
            # scheme-built operators carry ~1e-16 rounding in the zero entries
            assert max_abs(channel_power(dec, m) - one) <= 1e-15
        # the literal projective pair is idempotent bit for bit
        exact = decompose(MeasurementSet([np.diag([0, 1j]), np.diag([1, 0])]))
        for m in (2, 3, 10, 100):
            assert np.array_equal(channel_power(exact, m), channel_power(exact, 1))
        assert time.perf_counter() - start < 1.0


def test_criterion_2_convergence_rate():
    with criterion(2, "weak pair converges at rate cos^m(0.3); off-block at m=50 is cos^50(0.3)"):
        dec = decompose(weak_pair())
        limit = asymptotic_channel(dec)
        g = math.cos(0.3)
        for m in range(1, 201):
            assert max_abs(channel_power(dec, m) - limit) <= 2 * g**m
        off = abs(channel_power(dec, 50)[1, 1])
        assert abs(off - g**50) < 1e-10
        assert abs(off - 0.10181653147983688) < 1e-10


def test_criterion_3_typicality_oracle():
    with criterion(3, "exact neighborhood weights match rational enumeration of all 21 types"):
        start = time.perf_counter()
        m, delta = 20, 0.1
        w = typical_neighborhood_weights(SYM, m, delta)
        sig = [(Fraction(1, 4), Fraction(3, 4)), (Fraction(3, 4), Fraction(1, 4))]
        oracle = np.zeros((2, 2))
        full = np.zeros(2)
        for c in range(m + 1):
            F = np.array([c / m, 1 - c / m])
            for k, (a, b) in enumerate(sig):
                p = float(math.comb(m, c) * a**c * b ** (m - c))
                full[k] += p
                for j, g in enumerate(SYM):
                    ent = sum(f * math.log(f / gi) for f, gi in zip(F, g) if f > 0)
                    if ent <= delta:
                        oracle[j, k] += p
        assert w.grid.shape[0] == 21
        assert np.max(np.abs(w.exact - oracle)) <= 1e-12
        col = w.grid_weights("exact").sum(axis=0)
        assert np.max(np.abs(col - 1)) <= 1e-12 and np.max(np.abs(full - 1)) <= 1e-12
        assert time.perf_counter() - start < 1.0


def test_criterion_4_separation_bound():
    with criterion(4, "separation m_min = 5; width-matched neighborhoods disjoint at m=5, overlapping at m=3"):
        assert separation_bound(SYM, 0.5) == pytest.approx(4.159, abs=5e-4)
        assert separation_bound(SYM, 0.5) == pytest.approx(6 * math.log(2), rel=1e-12)
        assert separation_m_min(SYM, 0.5) == 5
        assert gaussians_separated(*SYM, 5, 0.5)
        assert not gaussians_separated(*SYM, 3, 0.5)


def test_criterion_5_error_bound():
    with criterion(5, "count bound 201 e^-20 at m=200 dominates the enumerated leak; vacuous at m=20"):
        expect = 201 * math.exp(-20)
        assert count_bound(200, 2, 0.1) == pytest.approx(expect, rel=1e-12)
        assert expect == pytest.approx(4.1e-7, abs=0.05e-7)
        rep = error_bound(SYM, 200, 0.1)
        for b in rep.groups:
            assert b.bound_level == pytest.approx(expect, rel=1e-12)
            assert b.leak < b.bound <= b.bound_level
        low = error_bound(SYM, 20, 0.1)
        assert low.vacuous and all(b.vacuous for b in low.groups)


def test_criterion_6_monte_carlo_born_statistics():
    with criterion(6, "2000 shots at m=500 reproduce Born weights (0.3, 0.7) with fidelity >= 0.99"):
        start = time.perf_counter()
        rho0 = np.diag([0.3, 0.7]).astype(complex)
        rep = run_ensemble(weak_pair(), rho0, 500, 2000, seed=20240601, workers=1)
        tol = 3 * math.sqrt(0.3 * 0.7 / 2000)
        assert rep.aborted == 0
        assert abs(rep.empirical_probs[0] - 0.3) <= tol
        assert abs(rep.empirical_probs[1] - 0.7) <= tol
        assert min(rep.mean_fidelity) >= 0.99
        assert time.perf_counter() - start < 30.0


def test_criterion_7_selective_nonselective_equivalence():
    with criterion(7, "exhaustive enumeration of 2^8 paths reproduces the 8-fold channel"):
        rng = np.random.default_rng(7)
        for mset in (weak_pair(), random_commuting_set(rng, 2, 2, 2)[0]):
            A = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
            rho0 = A @ A.conj().T
            rho0 /= np.trace(rho0)
            target = devectorize(channel_power(decompose(mset), 8) @ vectorize(rho0))
            assert max_abs(path_average(mset, rho0, 8) - target) <= 1e-10


def test_criterion_8_bosonic_example():
    with criterion(8, "bosonic parity and N=2 modular schemes: polarizations, groups, even-m limit"):
        s1, _ = bosonic_modular_scheme(1, 8, 0.0)
        df = s1.class_polarizations()
        assert np.max(np.abs(df - [1, -1])) <= 1e-15
        s2, mset = bosonic_modular_scheme(2, 8, np.pi / 4)
        df = s2.class_polarizations()
        assert np.max(np.abs(np.abs(df) - math.sqrt(2) / 2)) <= 1e-12
        assert df[0] > 0 > df[1]
        dec = decompose(mset)
        assert dec.s == 2 and dec.groups == ((0, 2, 4, 6), (1, 3, 5, 7))
        P = s2.class_projectors()
        modular = sum(np.kron(Pk, Pk.conj()) for Pk in P)
        assert max_abs(channel_power(dec, 200) - modular) < 1e-6


def test_criterion_9_unitary_mixing_invariance():
    with criterion(9, "20 random unitary mixings leave the channel matrix unchanged"):
        rng = np.random.default_rng(9)
        base_sets = [weak_pair(), random_commuting_set(rng, 3, 3, 3)[0]]
        worst = 0.0
        for i in range(20):
            mset = base_sets[i % 2]
            T = unitary_group.rvs(mset.r, random_state=rng)
            worst = max(worst, max_abs(channel_matrix(apply_unitary_mixing(mset, T)) - channel_matrix(mset)))
        assert worst <= 1e-12
