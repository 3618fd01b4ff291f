"""Monte Carlo trajectories of sequential selective measurements.

Every shot owns a Philox stream keyed by ``(seed, shot)``; round t consumes
the t-th uniform of that stream. Outcomes therefore do not depend on how shots
are batched or spread over workers.

The state is propagated in the common eigenbasis, where each measurement
operator acts as an elementwise multiplication. Pure initial states are
propagated as vectors, mixed ones as density matrices.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import MisclassificationError, ZeroProbabilityError
from .povm import (
    P_FLOOR,
    CanonicalDecomposition,
    MeasurementSet,
    decompose,
    density_matrix,
    selective_update,
)
from .typicality import FrequencyDistribution, classify_frequency, group_signatures

CHUNK = 512


def shot_rng(seed: int, shot: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(shot)])))


@dataclass
class TrajectoryRecord:
    outcomes: np.ndarray
    frequency: FrequencyDistribution
    final_state: np.ndarray
    classified_group: int
    margin: float
    log_likelihood: float

    @property
    def outcome_string(self) -> str:
        return "".join(str(a) for a in self.outcomes) if self.frequency.r <= 10 else ",".join(map(str, self.outcomes))


@dataclass
class EnsembleReport:
    shots: int
    m: int
    seed: int
    group_counts: list[int]
    empirical_probs: list[float]
    born_weights: list[float]
    mean_fidelity: list[float | None]
    aborted: int = 0

    def to_dict(self) -> dict:
        return {
            "shots": self.shots,
            "m": self.m,
            "seed": self.seed,
            "group_counts": self.group_counts,
            "empirical_probs": self.empirical_probs,
            "born_weights": self.born_weights,
            "mean_fidelity": self.mean_fidelity,
            "aborted": self.aborted,
        }


def _pure_vector(rho: np.ndarray, tol: float = 1e-12):
    w, U = np.linalg.eigh(rho)
    if w[-1] >= 1 - tol:
        return U[:, -1]
    return None


def _run_batch(C, start, uniforms, pure, p_floor):
    """Propagate a batch of eigenbasis states through ``uniforms.shape[1]`` rounds.

    ``start`` is a length-d vector (pure) or d x d matrix; returns outcomes,
    final eigenbasis states, log-likelihoods and an abort mask.
    """
    n, m = uniforms.shape
    r = C.shape[0]
    weights = np.abs(C) ** 2
    outcomes = np.zeros((n, m), dtype=np.int64)
    loglik = np.zeros(n)
    aborted = np.zeros(n, dtype=bool)
    if pure:
        state = np.tile(start, (n, 1))
    else:
        state = np.tile(start, (n, 1, 1))
        pair = np.einsum("ai,aj->aij", C, C.conj())
    rows = np.arange(n)
    for t in range(m):
        if pure:
            probs = (np.abs(state) ** 2) @ weights.T
        else:
            diag = np.real(np.einsum("nii->ni", state))
            probs = diag @ weights.T
        probs = np.clip(probs, 0.0, None)
        cum = np.cumsum(probs, axis=1)
        alpha = np.minimum((cum <= uniforms[:, t : t + 1] * cum[:, -1:]).sum(axis=1), r - 1)
        p = probs[rows, alpha]
        bad = p < p_floor
        if np.any(bad):
            aborted |= bad
            p = np.where(bad, 1.0, p)
        outcomes[:, t] = alpha
        loglik += np.log(p)
        if pure:
            state = state * C[alpha] / np.sqrt(p)[:, None]
        else:
            state = state * pair[alpha] / p[:, None, None]
    return outcomes, state, loglik, aborted


def _prepare(mset, rho0, decomp):
    if decomp is None:
        decomp = decompose(mset)
    rho0 = density_matrix(rho0)
    V = decomp.eigen.basis
    psi = _pure_vector(rho0)
    if psi is not None:
        return decomp, rho0, True, V.conj().T @ psi
    return decomp, rho0, False, V.conj().T @ rho0 @ V


def _to_original(V, state, pure):
    if pure:
        psi = V @ state
        rho = np.outer(psi, psi.conj())
    else:
        rho = V @ state @ V.conj().T
    return (rho + rho.conj().T) / 2


def _record(outcomes, state_eig, loglik, decomp, pure, sigs) -> TrajectoryRecord:
    freq = FrequencyDistribution.from_outcomes(outcomes, decomp.r)
    k, margin = classify_frequency(freq, sigs)
    return TrajectoryRecord(
        outcomes=np.asarray(outcomes),
        frequency=freq,
        final_state=_to_original(decomp.eigen.basis, state_eig, pure),
        classified_group=k,
        margin=margin,
        log_likelihood=float(loglik),
    )


def run_trajectory(
    mset: MeasurementSet,
    rho0,
    m: int,
    rng: np.random.Generator,
    decomp: CanonicalDecomposition | None = None,
    p_floor: float = P_FLOOR,
) -> TrajectoryRecord:
    """Sample one sequence of m selective measurements with Born-rule outcomes."""
    if m < 1:
        raise ValueError("m must be at least 1")
    decomp, rho0, pure, start = _prepare(mset, rho0, decomp)
    uniforms = rng.random(m)[None, :]
    outcomes, state, loglik, aborted = _run_batch(decomp.eigen.coefficients, start, uniforms, pure, p_floor)
    if aborted[0]:
        raise ZeroProbabilityError("trajectory reached an outcome below the probability floor")
    return _record(outcomes[0], state[0], loglik[0], decomp, pure, group_signatures(decomp))


def fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Uhlmann fidelity ``(Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2``."""
    w, U = np.linalg.eigh(rho)
    sq = (U * np.sqrt(np.clip(w, 0, None))) @ U.conj().T
    ev = np.linalg.eigvalsh(sq @ sigma @ sq)
    return float(min(1.0, math.fsum(np.sqrt(np.clip(ev, 0, None))) ** 2))


def projected_target(decomp: CanonicalDecomposition, k: int, rho0, m: int) -> tuple[np.ndarray, float]:
    """Normalized ``P~_k^m rho0 P~_k^{dagger m}`` and its weight ``Tr(P_k rho0)``."""
    Pk = decomp.projectors[k]
    weight = float(np.real(np.trace(Pk @ rho0)))
    U = np.linalg.matrix_power(decomp.phased_projectors[k], m)
    target = U @ rho0 @ U.conj().T
    return target / max(weight, np.finfo(float).tiny), weight


def conditional_projector_fidelity(
    record: TrajectoryRecord,
    decomp: CanonicalDecomposition,
    rho0,
    p_floor: float = P_FLOOR,
) -> tuple[float, float]:
    """Fidelity of a trajectory's final state with the emergent selective projection.

    Returns ``(fidelity, weight)`` where weight is ``Tr(P_k rho0)`` for the
    classified group k.
    """
    rho0 = density_matrix(rho0)
    k = record.classified_group
    target, weight = projected_target(decomp, k, rho0, record.frequency.m)
    if weight < p_floor:
        raise MisclassificationError(f"classified group {k} has no overlap with the initial state")
    return fidelity(record.final_state, target), weight


def _simulate_chunk(args):
    decomp, start, pure, m, seed, shots, p_floor = args
    uniforms = np.stack([shot_rng(seed, i).random(m) for i in shots])
    return _run_batch(decomp.eigen.coefficients, start, uniforms, pure, p_floor)


def run_ensemble(
    mset: MeasurementSet,
    rho0,
    m: int,
    shots: int,
    seed: int,
    decomp: CanonicalDecomposition | None = None,
    workers: int = 1,
    keep_records: bool = False,
    p_floor: float = P_FLOOR,
):
    """Simulate ``shots`` independent trajectories and tally classified groups.

    Returns the :class:`EnsembleReport`, plus the list of per-shot records and
    fidelities when ``keep_records`` is set (aborted shots appear as ``None``).
    """
    if shots < 1 or m < 1:
        raise ValueError("shots and m must be positive")
    decomp, rho0, pure, start = _prepare(mset, rho0, decomp)
    sigs = group_signatures(decomp)
    chunks = [range(lo, min(lo + CHUNK, shots)) for lo in range(0, shots, CHUNK)]
    jobs = [(decomp, start, pure, m, seed, c, p_floor) for c in chunks]
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_simulate_chunk, jobs))
    else:
        results = [_simulate_chunk(j) for j in jobs]

    s = decomp.s
    counts = [0] * s
    fid_sums = [[] for _ in range(s)]
    records = []
    aborted = 0
    for outcomes, states, logliks, bad in results:
        for i in range(outcomes.shape[0]):
            if bad[i]:
                aborted += 1
                records.append(None)
                continue
            rec = _record(outcomes[i], states[i], logliks[i], decomp, pure, sigs)
            k = rec.classified_group
            counts[k] += 1
            target, weight = projected_target(decomp, k, rho0, m)
            fid = fidelity(rec.final_state, target) if weight >= p_floor else 0.0
            fid_sums[k].append(fid)
            if keep_records:
                records.append((rec, fid))
    done = shots - aborted
    report = EnsembleReport(
        shots=shots,
        m=m,
        seed=seed,
        group_counts=counts,
        empirical_probs=[c / done if done else 0.0 for c in counts],
        born_weights=[float(np.real(np.trace(P @ rho0))) for P in decomp.projectors],
        mean_fidelity=[math.fsum(f) / len(f) if f else None for f in fid_sums],
        aborted=aborted,
    )
    if keep_records:
        return report, records
    return report


def path_average(mset: MeasurementSet, rho0, m: int, p_floor: float = P_FLOOR) -> np.ndarray:
    """Exhaustive mixture ``sum_paths p(path) rho_path`` over all r**m outcome sequences.

    Uses the dense operators and :func:`selective_update` directly; it is an
    independent check of the closed-form channel power.
    """
    rho0 = density_matrix(rho0)
    total = np.zeros_like(rho0)
    for path in itertools.product(range(mset.r), repeat=m):
        weight, rho = 1.0, rho0
        for alpha in path:
            M = mset.operators[alpha]
            p = float(np.real(np.trace(M @ rho @ M.conj().T)))
            if p < p_floor:
                weight = 0.0
                break
            weight *= p
            rho = selective_update(mset, rho, alpha, p_floor)
        if weight:
            total += weight * rho
    return total
