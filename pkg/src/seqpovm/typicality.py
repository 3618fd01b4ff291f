"""Method-of-types analysis of outcome sequences.

Expanding ``Phi^m`` with the multinomial theorem sorts the r**m outcome
sequences by their frequency vector ``F = (m_1/m, ..., m_r/m)``. Within group
k, a type ``F`` carries the multinomial weight of the group signature
``F_k = |c~_k|^2``, which behaves like ``exp(-m S(F || F_k))`` for large m.
Everything here works on the exact grid of types with denominator m.
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import gammaln, rel_entr, xlogy

from .errors import (
    EnumerationTooLargeError,
    NeighborhoodOverlapError,
    NotApplicableError,
    StructuralError,
    UnclassifiableError,
)
from .povm import CanonicalDecomposition

ENUMERATION_CAP = 2_000_000
COINCIDE_TOL = 1e-10


@dataclass(frozen=True)
class FrequencyDistribution:
    """Outcome counts of a length-m sequence."""

    counts: tuple[int, ...]

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if not counts or any(c < 0 for c in counts):
            raise StructuralError("counts must be a non-empty list of non-negative integers")
        if sum(counts) == 0:
            raise StructuralError("counts must sum to a positive length")
        object.__setattr__(self, "counts", counts)

    @classmethod
    def from_outcomes(cls, outcomes: Sequence[int], r: int) -> "FrequencyDistribution":
        return cls(tuple(np.bincount(np.asarray(outcomes, dtype=int), minlength=r)))

    @property
    def m(self) -> int:
        return sum(self.counts)

    @property
    def r(self) -> int:
        return len(self.counts)

    @property
    def freqs(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=float) / self.m


def _probs(F) -> np.ndarray:
    if isinstance(F, FrequencyDistribution):
        return F.freqs
    return np.asarray(F, dtype=float).reshape(-1)


def _signature_list(source) -> list[np.ndarray]:
    if isinstance(source, CanonicalDecomposition):
        return group_signatures(source)
    return [np.asarray(s, dtype=float).reshape(-1) for s in source]


def group_signatures(decomp: CanonicalDecomposition) -> list[np.ndarray]:
    """Outcome distribution ``|c~_k|^2`` of every group."""
    R = decomp.representatives
    return [np.abs(R[:, k]) ** 2 for k in range(decomp.s)]


def relative_entropy(F, G) -> float:
    """``S(F || G) = sum f_i ln(f_i / g_i)`` with ``0 ln 0 = 0``; ``inf`` on support mismatch."""
    f = _probs(F)
    g = _probs(G)
    if f.shape != g.shape:
        raise StructuralError(f"length mismatch: {f.size} vs {g.size}")
    return math.fsum(rel_entr(f, g))


def _counts_array(F) -> np.ndarray:
    if isinstance(F, FrequencyDistribution):
        return np.asarray(F.counts, dtype=float)
    return np.asarray(F, dtype=float)


def log_sequence_weight_exact(F, G) -> float:
    """Log of the multinomial probability of the type ``F`` under ``G``."""
    counts = _counts_array(F)
    g = _probs(G)
    if counts.shape != g.shape:
        raise StructuralError(f"length mismatch: {counts.size} vs {g.size}")
    m = counts.sum()
    return float(gammaln(m + 1) - math.fsum(gammaln(counts + 1)) + math.fsum(xlogy(counts, g)))


def sequence_weight_exact(F, G) -> float:
    """``m! / prod(m_i!) * prod(g_i^{m_i})``, evaluated in the log domain."""
    return math.exp(log_sequence_weight_exact(F, G))


def sequence_weight_stirling(F, G) -> float:
    """Leading-order weight ``exp(-m S(F || G))``."""
    if not isinstance(F, FrequencyDistribution):
        F = FrequencyDistribution(tuple(F))
    return math.exp(-F.m * relative_entropy(F, G))


def grid_size(m: int, r: int) -> int:
    return math.comb(m + r - 1, r - 1)


def simplex_grid(m: int, r: int, cap: int = ENUMERATION_CAP) -> np.ndarray:
    """All count vectors of length r summing to m, in lexicographic order."""
    n = grid_size(m, r)
    if n > cap:
        raise EnumerationTooLargeError(
            f"simplex grid has {n} points (m={m}, r={r}), above the cap of {cap}"
        )
    out = np.empty((n, r), dtype=np.int64)
    for row, bars in enumerate(itertools.combinations(range(m + r - 1), r - 1)):
        prev = -1
        for i, b in enumerate(bars):
            out[row, i] = b - prev - 1
            prev = b
        out[row, r - 1] = m + r - 2 - prev
    return out


def _grid_entropies(grid: np.ndarray, sigs: list[np.ndarray]) -> np.ndarray:
    freqs = grid / grid.sum(axis=1, keepdims=True)
    return np.stack([rel_entr(freqs, g[None, :]).sum(axis=1) for g in sigs], axis=1)


def _grid_log_weights(grid: np.ndarray, sigs: list[np.ndarray]) -> np.ndarray:
    m = grid[0].sum()
    base = gammaln(m + 1) - gammaln(grid + 1).sum(axis=1)
    return np.stack([base + xlogy(grid, g[None, :]).sum(axis=1) for g in sigs], axis=1)


# -- Gaussian separation ---------------------------------------------------------


def _curvature(fj: np.ndarray, fk: np.ndarray, denom: np.ndarray) -> float:
    diff2 = (fj - fk) ** 2
    if np.any((denom == 0) & (diff2 > 0)):
        return math.inf
    keep = denom > 0
    return math.fsum(diff2[keep] / denom[keep])


def _curvatures(Fj, Fk) -> tuple[float, float]:
    fj, fk = _probs(Fj), _probs(Fk)
    if fj.shape != fk.shape:
        raise StructuralError("signatures have different lengths")
    if np.max(np.abs(fj - fk)) <= COINCIDE_TOL:
        raise ValueError("identical signatures have no separating line")
    return _curvature(fj, fk, fj), _curvature(fj, fk, fk)


def _inv_sqrt(x: float) -> float:
    return 0.0 if math.isinf(x) else x ** -0.5


def gaussian_half_width(Fj, Fk, m: int, eta: float) -> tuple[float, float]:
    """Half widths of the two Gaussians along the segment from ``F_j`` to ``F_k``.

    ``eta`` is the height ratio at which the width is read off. A direction in
    which one signature has a zero entry but the other does not has infinite
    curvature, so that Gaussian's width is 0.
    """
    if not 0 < eta <= 1:
        raise ValueError("eta must lie in (0, 1]")
    aj, ak = _curvatures(Fj, Fk)
    pre = math.sqrt(2 * abs(math.log(eta)) / m)
    return pre * _inv_sqrt(aj), pre * _inv_sqrt(ak)


def gaussians_separated(Fj, Fk, m: int, eta: float) -> bool:
    """Whether width-matched neighborhoods of the two signatures are disjoint."""
    tj, tk = gaussian_half_width(Fj, Fk, m, eta)
    return tj + tk < 1


def coinciding_pairs(signatures) -> list[tuple[int, int]]:
    sigs = _signature_list(signatures)
    return [
        (j, k)
        for j in range(len(sigs))
        for k in range(j + 1, len(sigs))
        if np.max(np.abs(sigs[j] - sigs[k])) <= COINCIDE_TOL
    ]


def separation_bound(signatures, eta: float) -> float:
    """``2|ln eta| max_{j != k} [A_jk^{-1/2} + B_jk^{-1/2}]^2`` over distinct signatures."""
    sigs = _signature_list(signatures)
    if len(sigs) < 2:
        raise NotApplicableError("separation needs at least two groups")
    if not 0 < eta <= 1:
        raise ValueError("eta must lie in (0, 1]")
    same = set(coinciding_pairs(sigs))
    if same:
        warnings.warn(f"coinciding signatures {sorted(same)} excluded from the separation bound")
    worst = None
    for j in range(len(sigs)):
        for k in range(j + 1, len(sigs)):
            if (j, k) in same:
                continue
            aj, ak = _curvatures(sigs[j], sigs[k])
            val = (_inv_sqrt(aj) + _inv_sqrt(ak)) ** 2
            worst = val if worst is None else max(worst, val)
    if worst is None:
        raise NotApplicableError("all signatures coincide")
    return 2 * abs(math.log(eta)) * worst


def separation_m_min(signatures, eta: float) -> int:
    """Smallest m strictly above :func:`separation_bound`."""
    return math.floor(separation_bound(signatures, eta)) + 1


# -- neighborhoods and error rates -----------------------------------------------


@dataclass
class NeighborhoodWeights:
    """Weights ``w[j, k]`` of group k's sequences inside the neighborhood of ``F_j``."""

    m: int
    delta: float
    grid: np.ndarray
    entropies: np.ndarray  # n_grid x s, S(F || F_k)
    log_weights: np.ndarray  # n_grid x s, exact multinomial
    members: np.ndarray  # n_grid x s, bool
    exact: np.ndarray
    stirling: np.ndarray
    coinciding_pairs: list[tuple[int, int]]

    def grid_weights(self, variant: str = "exact") -> np.ndarray:
        if variant == "exact":
            return np.exp(self.log_weights)
        return np.exp(-self.m * self.entropies)


def _fsum_columns(values: np.ndarray, mask: np.ndarray) -> np.ndarray:
    return np.array([math.fsum(values[mask, k]) for k in range(values.shape[1])])


def typical_neighborhood_weights(
    signatures, m: int, delta: float, cap: int = ENUMERATION_CAP
) -> NeighborhoodWeights:
    """Sum exact and Stirling type weights over each neighborhood ``{F : S(F||F_j) <= delta}``.

    Raises NeighborhoodOverlapError if two neighborhoods of distinct signatures
    share a grid point.
    """
    sigs = _signature_list(signatures)
    r = sigs[0].size
    if any(s.size != r for s in sigs):
        raise StructuralError("signatures have different lengths")
    grid = simplex_grid(m, r, cap)
    ent = _grid_entropies(grid, sigs)
    logw = _grid_log_weights(grid, sigs)
    members = ent <= delta
    same = coinciding_pairs(sigs)
    label = list(range(len(sigs)))
    for j, k in same:
        label[k] = label[j]
    for j in range(len(sigs)):
        for k in range(j + 1, len(sigs)):
            if label[j] != label[k] and np.any(members[:, j] & members[:, k]):
                raise NeighborhoodOverlapError(
                    f"neighborhoods of groups {j} and {k} overlap at delta={delta:g}; reduce delta"
                )
    w_exact = np.exp(logw)
    w_stir = np.exp(-m * ent)
    s = len(sigs)
    exact = np.stack([_fsum_columns(w_exact, members[:, j]) for j in range(s)])
    stirling = np.stack([_fsum_columns(w_stir, members[:, j]) for j in range(s)])
    return NeighborhoodWeights(m, delta, grid, ent, logw, members, exact, stirling, same)


def count_bound(m: int, r: int, exponent: float) -> float:
    """Type-counting bound ``C(m + r - 1, r - 1) exp(-m S*)``."""
    if math.isinf(exponent):
        return 0.0
    return math.exp(math.log(grid_size(m, r)) - m * exponent)


@dataclass
class GroupErrorBound:
    group: int
    boundary_point: tuple[int, ...] | None
    exponent: float  # S(F_j* || F_j), F_j* the closest type outside the neighborhood
    exponent_reversed: float  # S(F_j || F_j*)
    exponent_level: float  # delta, the value of S(. || F_j) on the continuous boundary
    bound: float
    bound_level: float
    leak: float  # 1 - w_jj from the exact weights
    trace_distance: float  # 1 - w_jj + sum_{k != j} w_jk

    @property
    def vacuous(self) -> bool:
        return self.bound > 1

    def to_dict(self) -> dict:
        return {
            "group": self.group,
            "boundary_point": list(self.boundary_point) if self.boundary_point else None,
            "exponent": self.exponent,
            "exponent_reversed": self.exponent_reversed,
            "exponent_level": self.exponent_level,
            "bound": self.bound,
            "bound_level": self.bound_level,
            "vacuous": self.vacuous,
            "leak": self.leak,
            "trace_distance": self.trace_distance,
        }


@dataclass
class ErrorBoundReport:
    groups: list[GroupErrorBound]
    total_bound: float

    @property
    def vacuous(self) -> bool:
        return self.total_bound > 1

    def __getitem__(self, j):
        return self.groups[j]


def error_bound(signatures, m: int, delta: float, weights: NeighborhoodWeights | None = None) -> ErrorBoundReport:
    """Per-group bounds on ``1 - w_jj`` and their sum, the trace-distance bound.

    The exponent uses the closest grid type outside the neighborhood, which
    makes the bound rigorous. The continuous-boundary variant (exponent
    ``delta``) is reported alongside as ``bound_level``.
    """
    sigs = _signature_list(signatures)
    if weights is None:
        weights = typical_neighborhood_weights(sigs, m, delta)
    r = sigs[0].size
    w_exact = weights.grid_weights("exact")
    out = []
    for j, g in enumerate(sigs):
        outside = ~weights.members[:, j]
        leak = math.fsum(w_exact[outside, j])
        cross = math.fsum(weights.exact[j, k] for k in range(len(sigs)) if k != j)
        ent = np.where(outside, weights.entropies[:, j], np.inf)
        idx = int(np.argmin(ent))
        if np.isfinite(ent[idx]):
            point = tuple(int(c) for c in weights.grid[idx])
            exponent = float(ent[idx])
            reversed_ = relative_entropy(g, weights.grid[idx] / m)
        else:
            # every type outside the neighborhood is unreachable from F_j
            point, exponent, reversed_ = None, math.inf, math.inf
        out.append(
            GroupErrorBound(
                group=j,
                boundary_point=point,
                exponent=exponent,
                exponent_reversed=reversed_,
                exponent_level=float(delta),
                bound=count_bound(m, r, exponent),
                bound_level=count_bound(m, r, delta) if point is not None else 0.0,
                leak=leak,
                trace_distance=leak + cross,
            )
        )
    return ErrorBoundReport(out, math.fsum(b.bound for b in out))


# -- classification ---------------------------------------------------------------


def classify_frequency(F, signatures) -> tuple[int, float]:
    """Group whose signature is closest in relative entropy, and the margin to the runner-up.

    Ties go to the lowest group index. The margin is ``inf`` for a single
    signature or when every other signature is unreachable.
    """
    sigs = _signature_list(signatures)
    ent = np.array([relative_entropy(F, g) for g in sigs])
    k = int(np.argmin(ent))
    if math.isinf(ent[k]):
        raise UnclassifiableError("frequency vector is outside the support of every signature")
    rest = np.delete(ent, k)
    margin = float(rest.min() - ent[k]) if rest.size else math.inf
    return k, margin


# -- report -----------------------------------------------------------------------


@dataclass
class TypicalityReport:
    signatures: list[np.ndarray]
    m: int
    eta: float
    delta: float
    m_min: int | None
    separation: float | None
    weights: NeighborhoodWeights
    errors: ErrorBoundReport
    coinciding_pairs: list[tuple[int, int]] = field(default_factory=list)

    @property
    def error_bounds(self) -> list[float]:
        return [g.bound for g in self.errors.groups]

    def to_dict(self, variant: str = "exact") -> dict:
        w = self.weights.exact if variant == "exact" else self.weights.stirling
        return {
            "m": self.m,
            "eta": self.eta,
            "delta": self.delta,
            "signatures": [list(map(float, s)) for s in self.signatures],
            "m_min": self.m_min,
            "separation_bound": self.separation,
            "weight_variant": variant,
            "weights": w.tolist(),
            "weights_exact": self.weights.exact.tolist(),
            "weights_stirling": self.weights.stirling.tolist(),
            "error_bounds": [g.to_dict() for g in self.errors.groups],
            "total_error_bound": self.errors.total_bound,
            "coinciding_pairs": [list(p) for p in self.coinciding_pairs],
        }


def typicality_report(source, m: int, eta: float, delta: float, cap: int = ENUMERATION_CAP) -> TypicalityReport:
    sigs = _signature_list(source)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            sep = separation_bound(sigs, eta)
        m_min = math.floor(sep) + 1
    except NotApplicableError:
        sep, m_min = None, None
    weights = typical_neighborhood_weights(sigs, m, delta, cap)
    errors = error_bound(sigs, m, delta, weights)
    return TypicalityReport(sigs, m, eta, delta, m_min, sep, weights, errors, weights.coinciding_pairs)
