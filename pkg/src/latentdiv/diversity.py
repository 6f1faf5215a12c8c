"""
Intra-list latent distance in the item factor space.

Item ``j`` is represented by its factor column ``P[:, j]``.  A list's
diversity is the sum of pairwise distances between its items (unordered
pairs), normalized by the largest such sum any ``k`` items can reach.
"""

from __future__ import annotations

import csv
import enum
import itertools
import logging
import math
from dataclasses import dataclass
from typing import Sequence, TextIO

import numpy as np
from scipy.spatial.distance import cdist

from .ranking import RecommendationList

_logger = logging.getLogger(__name__)

EXHAUSTIVE_BUDGET = 2_000_000
# rows per block when scanning all pairs without materializing m x m
_BLOCK = 2048


class DistanceMetric(str, enum.Enum):
    EUCLIDEAN = "euclidean"
    COSINE = "cosine"

    @property
    def kind(self) -> str:
        return self.value


def _metric(metric) -> DistanceMetric:
    return metric if isinstance(metric, DistanceMetric) else DistanceMetric(metric)


class ZeroVectorError(ValueError):
    """Cosine distance was requested for a zero latent vector."""


def _unit_rows(V: np.ndarray, idx=None) -> np.ndarray:
    # divide out the largest entry first so squaring cannot underflow
    V = np.atleast_2d(V)
    scale = np.abs(V).max(axis=1)
    if (scale == 0).any():
        bad = int(np.flatnonzero(scale == 0)[0])
        item = bad if idx is None else int(np.asarray(idx)[bad])
        raise ZeroVectorError(f"cosine distance undefined: item {item} has a zero latent vector")
    W = V / scale[:, None]
    return W / np.linalg.norm(W, axis=1)[:, None]


def dist(metric, x, y) -> float:
    """
    Distance between two latent vectors.

    Euclidean is ``||x - y||``; cosine is ``1 - x.y / (||x|| ||y||)`` in
    ``[0, 2]`` and rejects zero vectors.
    """
    metric = _metric(metric)
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    if metric is DistanceMetric.EUCLIDEAN:
        return float(np.linalg.norm(x - y))
    if not x.any() or not y.any():
        raise ZeroVectorError("cosine distance undefined for a zero vector")
    u, v = _unit_rows(np.stack([x, y]))
    return float(min(2.0, max(0.0, 1.0 - float(u @ v))))


def cross_distances(metric, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Distances between rows of ``A`` and rows of ``B``."""
    metric = _metric(metric)
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    if metric is DistanceMetric.COSINE:
        return np.clip(cdist(_unit_rows(A), _unit_rows(B), "cosine"), 0.0, 2.0)
    return cdist(A, B, "euclidean")


def pairwise_distances(metric, V: np.ndarray) -> np.ndarray:
    """Symmetric distance matrix between the rows of ``V`` with a zero diagonal."""
    D = cross_distances(metric, V, V)
    D = np.triu(D, 1)
    return D + D.T


def _vectors(P: np.ndarray, items=None) -> np.ndarray:
    # P is d x m; distances work on rows
    V = np.asarray(P, dtype=np.float64).T
    return V if items is None else V[np.asarray(items, dtype=np.int64)]


def illd_sum(items: Sequence[int], P: np.ndarray, metric) -> float:
    """Sum of distances over unordered pairs of distinct list members."""
    items = list(items)
    if len(set(items)) != len(items):
        raise ValueError("list items must be distinct")
    if len(items) < 2:
        return 0.0
    D = pairwise_distances(metric, _vectors(P, items))
    return math.fsum(D[np.triu_indices(len(items), 1)].tolist())


def contribution(member: int, others: Sequence[int], P: np.ndarray, metric) -> float:
    """Distance sum from one item to a set of items."""
    if len(others) == 0:
        return 0.0
    d = cross_distances(metric, _vectors(P, [member]), _vectors(P, others))
    return math.fsum(d[0].tolist())


@dataclass(frozen=True)
class MaxIlldResult:
    value: float
    subset: tuple[int, ...]
    method: str  # "exact" | "greedy_swap"

    @property
    def k(self) -> int:
        return len(self.subset)


class BudgetExceeded(RuntimeError):
    """Exhaustive maxILLD search would enumerate too many subsets."""


def max_illd_exact(
    P: np.ndarray, k: int, metric, exhaustive_budget: int = EXHAUSTIVE_BUDGET
) -> MaxIlldResult:
    """
    Largest pairwise-distance sum over all ``k``-subsets, by enumeration.

    Ties go to the lexicographically smallest subset.

    Raises:
        BudgetExceeded: if ``C(m, k)`` exceeds ``exhaustive_budget``.
    """
    m = P.shape[1]
    if not (1 <= k <= m):
        raise ValueError(f"k must lie in [1, {m}], got {k}")
    n_sub = math.comb(m, k)
    if n_sub > exhaustive_budget:
        raise BudgetExceeded(f"C({m}, {k}) = {n_sub} subsets exceeds budget {exhaustive_budget}")
    if k == 1:
        return MaxIlldResult(0.0, (0,), "exact")

    D = pairwise_distances(metric, _vectors(P))
    pairs = list(itertools.combinations(range(k), 2))
    best_val = -math.inf
    near: list[tuple[float, tuple[int, ...]]] = []
    chunk = max(1, 200_000 // k)
    combos = itertools.combinations(range(m), k)
    while True:
        block = np.fromiter(
            itertools.chain.from_iterable(itertools.islice(combos, chunk)), dtype=np.int64
        )
        if block.size == 0:
            break
        block = block.reshape(-1, k)
        sums = np.zeros(len(block))
        for a, b in pairs:
            sums += D[block[:, a], block[:, b]]
        best_val = max(best_val, float(sums.max()))
        cutoff = best_val - _slack(best_val)
        keep = sums >= cutoff
        near = [(v, s) for v, s in near if v >= cutoff]
        near.extend(zip(sums[keep].tolist(), map(tuple, block[keep].tolist())))

    # rounding can reorder near-equal sums: re-score the survivors with fsum,
    # ties to the lexicographically smallest subset
    cutoff = best_val - _slack(best_val)
    best = max(
        (s for v, s in near if v >= cutoff),
        key=lambda s: (math.fsum(D[a, b] for a, b in itertools.combinations(s, 2)), _neg(s)),
    )
    return MaxIlldResult(illd_sum(best, P, metric), tuple(best), "exact")


def _neg(s):
    return tuple(-x for x in s)


def _slack(v: float) -> float:
    return 1e-12 * max(abs(v), 1.0)


def _farthest_pair(V: np.ndarray, metric) -> tuple[int, int]:
    best, bi, bj = -math.inf, 0, 1
    m = len(V)
    for lo in range(0, m, _BLOCK):
        hi = min(m, lo + _BLOCK)
        D = cross_distances(metric, V[lo:hi], V)
        rows = np.arange(lo, hi)[:, None]
        D[np.arange(m)[None, :] <= rows] = -math.inf
        flat = int(np.argmax(D))
        val = D.flat[flat]
        if val > best:
            best = val
            bi, bj = lo + flat // m, flat % m
    return bi, bj


def max_illd_greedy(P: np.ndarray, k: int, metric, max_swaps: int = 10_000) -> MaxIlldResult:
    """
    Approximate maxILLD: farthest pair, greedy growth, then swap local search.

    The greedy phase adds the item with the largest distance sum to the
    chosen set.  The local search repeatedly applies the best improving
    single swap (member out, non-member in) until none improves.  All ties go
    to the smallest index.  On metric distances the result is at least half
    the true maximum.
    """
    metric = _metric(metric)
    V = _vectors(P)
    m = len(V)
    if not (1 <= k <= m):
        raise ValueError(f"k must lie in [1, {m}], got {k}")
    if metric is DistanceMetric.COSINE:
        _unit_rows(V)
    if k == 1:
        return MaxIlldResult(0.0, (0,), "greedy_swap")
    if k == m:
        subset = tuple(range(m))
        return MaxIlldResult(illd_sum(subset, P, metric), subset, "greedy_swap")

    i, j = _farthest_pair(V, metric)
    chosen = [i, j]
    in_set = np.zeros(m, dtype=bool)
    in_set[chosen] = True
    contrib = cross_distances(metric, V, V[chosen]).sum(axis=1)
    while len(chosen) < k:
        cand = np.where(in_set, -math.inf, contrib)
        nxt = int(np.argmax(cand))
        chosen.append(nxt)
        in_set[nxt] = True
        contrib += cross_distances(metric, V, V[[nxt]])[:, 0]

    S = sorted(chosen)
    value = illd_sum(S, P, metric)
    for _ in range(max_swaps):
        D_S = cross_distances(metric, V[S], V)  # k x m
        contrib = D_S.sum(axis=0)
        # gain of swapping member s for outsider t: c(t) - d(t, s) - c(s)
        gain = contrib[None, :] - D_S - contrib[S][:, None]
        gain[:, S] = -math.inf
        flat = int(np.argmax(gain))
        if gain.flat[flat] <= 1e-12 * max(value, 1.0):
            break
        out, inn = S[flat // m], flat % m
        trial = sorted([x for x in S if x != out] + [inn])
        trial_value = illd_sum(trial, P, metric)
        if trial_value <= value:
            break
        S, value = trial, trial_value
    else:
        _logger.warning("swap search stopped after %d swaps without converging", max_swaps)

    return MaxIlldResult(value, tuple(S), "greedy_swap")


def max_illd(
    P: np.ndarray, k: int, metric, exhaustive_budget: int = EXHAUSTIVE_BUDGET
) -> MaxIlldResult:
    """Exact maxILLD when ``C(m, k)`` fits the budget, greedy+swap otherwise."""
    if math.comb(P.shape[1], k) <= exhaustive_budget:
        return max_illd_exact(P, k, metric, exhaustive_budget)
    _logger.info("maxILLD for k=%d over %d items: using greedy+swap", k, P.shape[1])
    return max_illd_greedy(P, k, metric)


def nilld_ratio(items: Sequence[int], P: np.ndarray, metric, normalizer: MaxIlldResult) -> float:
    """Unclamped ratio of a list's distance sum to the normalizer (1 when it is 0)."""
    if len(items) != normalizer.k:
        raise ValueError(f"list has k={len(items)} but normalizer was computed for k={normalizer.k}")
    if normalizer.value == 0:
        return 1.0
    return illd_sum(items, P, metric) / normalizer.value


def nilld_user(rec: RecommendationList, P: np.ndarray, metric, normalizer: MaxIlldResult) -> float:
    """
    Normalized intra-list latent distance of one list, in ``[0, 1]``.

    A greedy normalizer can underestimate the true maximum, so the ratio is
    clamped at 1.  When the normalizer is 0 no list is more diverse than any
    other and the value is 1.
    """
    return min(1.0, nilld_ratio(rec.items, P, metric, normalizer))


@dataclass(frozen=True)
class DiversityReport:
    k: int
    metric: DistanceMetric
    max_illd: MaxIlldResult
    users: tuple[int, ...]
    per_user_nilld: tuple[float, ...]
    per_user_ratio: tuple[float, ...]
    overall_nilld: float

    @property
    def clamp_count(self) -> int:
        return sum(1 for r in self.per_user_ratio if r > 1.0)


def nilld_overall(
    recs: Sequence[RecommendationList], P: np.ndarray, metric, normalizer: MaxIlldResult
) -> DiversityReport:
    """Per-user nILLD for every list and their arithmetic mean."""
    if len(recs) == 0:
        raise ValueError("no recommendation lists")
    metric = _metric(metric)
    ratios = tuple(nilld_ratio(r.items, P, metric, normalizer) for r in recs)
    values = tuple(min(1.0, r) for r in ratios)
    return DiversityReport(
        k=normalizer.k,
        metric=metric,
        max_illd=normalizer,
        users=tuple(r.user for r in recs),
        per_user_nilld=values,
        per_user_ratio=ratios,
        overall_nilld=mean_nilld(values),
    )


def mean_nilld(values: Sequence[float]) -> float:
    """Arithmetic mean, kept inside ``[min(values), max(values)]``."""
    # the rounded quotient can land an ulp outside that range, which would
    # let every user meet a threshold the mean misses
    mean = math.fsum(values) / len(values)
    return min(max(mean, min(values)), max(values))


def _check_alpha(alpha: float) -> None:
    if not (0.0 <= alpha <= 1.0):
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")


def satisfies_alpha(report: DiversityReport, alpha: float) -> bool:
    """Whether the mean nILLD reaches ``alpha``."""
    _check_alpha(alpha)
    return report.overall_nilld >= alpha


def satisfies_individual_alpha(report: DiversityReport, alpha: float) -> tuple[bool, list[int]]:
    """Whether every user's nILLD reaches ``alpha``, plus the users that fall short."""
    _check_alpha(alpha)
    violators = [u for u, v in zip(report.users, report.per_user_nilld) if v < alpha]
    return not violators, violators


def write_report_csv(report: DiversityReport, out: TextIO) -> None:
    """
    Write per-user nILLD as CSV.

    Two comment lines describe the normalizer (``value,method,subset``), then
    a ``user,nilld`` table, then a final ``overall`` row.
    """
    out.write("# value,method,subset\n")
    subset = " ".join(str(j) for j in report.max_illd.subset)
    out.write(f"# {report.max_illd.value!r},{report.max_illd.method},{subset}\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["user", "nilld"])
    for u, v in zip(report.users, report.per_user_nilld):
        writer.writerow([u, repr(v)])
    writer.writerow(["overall", repr(report.overall_nilld)])
