"""
Per-user swap post-processing that enforces a minimum list diversity.

While a user's nILLD is below ``alpha``, the list member contributing the
least distance to the others is taken out, and the outside item that adds
the most distance to the remaining members (among items whose predicted
rating clears a floor) is put in.  When the best replacement is the item
just removed, the floor is multiplied by ``discount`` so that lower-rated
items become available.
"""

from __future__ import annotations

import csv
import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence, TextIO

import numpy as np

from .dataset import RatingsDataset
from .diversity import (
    DistanceMetric,
    MaxIlldResult,
    _metric,
    _vectors,
    cross_distances,
    max_illd,
    nilld_ratio,
)
from .factorization import FactorModel
from .ranking import RecommendationList, eligible_mask, resort

_logger = logging.getLogger(__name__)


class Status(str, enum.Enum):
    ALREADY_SATISFIED = "already_satisfied"
    SATISFIED = "satisfied"
    FIXED_POINT = "fixed_point"
    MAX_ITERS_EXCEEDED = "max_iters_exceeded"

    @property
    def ok(self) -> bool:
        return self in (Status.ALREADY_SATISFIED, Status.SATISFIED)


@dataclass(frozen=True)
class DiversifyConfig:
    """
    Settings for the swap loop.

    ``max_iters`` defaults to ``50 * k``.
    """

    alpha: float
    k: int
    metric: DistanceMetric = DistanceMetric.EUCLIDEAN
    discount: float = 0.9
    max_iters: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "metric", _metric(self.metric))
        if not (0.0 <= self.alpha <= 1.0):
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not (0.0 < self.discount < 1.0):
            raise ValueError(f"discount must lie strictly inside (0, 1), got {self.discount}")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.max_iters is None:
            object.__setattr__(self, "max_iters", 50 * self.k)
        elif self.max_iters < 1:
            raise ValueError("max_iters must be a positive integer")


@dataclass(frozen=True)
class DiversifyOutcome:
    user: int
    final_list: RecommendationList
    iterations: int
    swaps: int
    final_floor: float
    nilld_trace: tuple[float, ...]
    status: Status
    floor_trace: tuple[float, ...] = field(default=(), repr=False)

    @property
    def final_nilld(self) -> float:
        return self.nilld_trace[-1]


def _exact_argbest(items: np.ndarray, approx: np.ndarray, exact, sign: float) -> int:
    # near-ties under float summation are settled by exactly-rounded sums,
    # remaining ties by ascending item index
    target = sign * approx
    top = target.max()
    near = np.flatnonzero(target >= top - 1e-12 * max(abs(top), 1.0))
    if len(near) == 1:
        return int(items[near[0]])
    scored = sorted((-sign * exact(int(items[n])), int(items[n])) for n in near)
    return scored[0][1]


def least_diverse_member(items: Sequence[int], P: np.ndarray, metric) -> int:
    """
    The list member with the smallest distance sum to the other members.

    Ties go to the smallest item index.
    """
    items = list(items)
    if len(items) < 2:
        raise ValueError("need at least two items")
    V = _vectors(P)
    D = cross_distances(metric, V[items], V[items])
    arr = np.asarray(items)
    return _exact_argbest(
        arr, D.sum(axis=1), lambda j: math.fsum(D[items.index(j)].tolist()), sign=-1.0
    )


def best_replacement(
    remaining: Sequence[int],
    candidates: Sequence[int],
    P: np.ndarray,
    metric,
    scores: np.ndarray,
    floor: float,
) -> int | None:
    """
    The candidate with score at least ``floor`` that is farthest (by distance
    sum) from ``remaining``, or ``None`` when no candidate clears the floor.
    """
    cand = np.asarray(sorted(candidates), dtype=np.int64)
    if len(cand):
        cand = cand[np.asarray(scores)[cand] >= floor]
    if len(cand) == 0:
        return None
    if len(remaining) == 0:
        return int(cand[0])
    V = _vectors(P)
    rem = list(remaining)
    D = cross_distances(metric, V[cand], V[rem])
    return _exact_argbest(
        cand,
        D.sum(axis=1),
        lambda j: math.fsum(D[int(np.searchsorted(cand, j))].tolist()),
        sign=1.0,
    )


def _floor_can_drop(floor: float, lower_scores: np.ndarray) -> bool:
    # multiplying a positive floor approaches 0 from above: only positive
    # scores below it can ever be admitted; a non-positive floor cannot drop
    if floor <= 0:
        return False
    return bool(np.any(lower_scores > 0))


def diversify_user(
    model: FactorModel,
    train: RatingsDataset | None,
    rec: RecommendationList,
    cfg: DiversifyConfig,
    normalizer: MaxIlldResult,
    *,
    scores: np.ndarray | None = None,
) -> DiversifyOutcome:
    """
    Swap items into one user's list until its nILLD reaches ``cfg.alpha``.

    Args:
        model: factor model; its ``P`` defines item distances and, unless
            ``scores`` is given, its predictions define the rating floor.
        train: training data used to decide eligibility when
            ``rec.exclude_observed`` is set.
        rec: the user's top-k list.
        cfg: loop settings.
        normalizer: maxILLD for ``cfg.k`` and ``cfg.metric``.
        scores: predicted ratings of this user for every item, overriding
            ``model.scores(rec.user)``.

    Returns:
        A :class:`DiversifyOutcome`.  The loop ends as ``satisfied`` once the
        threshold is met, ``fixed_point`` when the removed item is its own best
        replacement and lowering the floor can no longer admit new items, or
        ``max_iters_exceeded`` after ``cfg.max_iters`` iterations.
    """
    if rec.k != cfg.k or normalizer.k != cfg.k:
        raise ValueError(f"list k={rec.k}, normalizer k={normalizer.k}, config k={cfg.k}")
    metric = cfg.metric
    P = model.P
    user = rec.user
    all_scores = model.scores(user) if scores is None else np.asarray(scores, dtype=np.float64)
    eligible = eligible_mask(train, user, P.shape[1], rec.exclude_observed)

    items = list(rec.items)
    floor = float(all_scores[items].min())
    trace = [min(1.0, nilld_ratio(items, P, metric, normalizer))]
    floors = [floor]
    iterations = swaps = 0

    if trace[-1] >= cfg.alpha:
        status = Status.ALREADY_SATISFIED
    else:
        status = None
        while trace[-1] < cfg.alpha:
            if iterations >= cfg.max_iters:
                status = Status.MAX_ITERS_EXCEEDED
                break
            iterations += 1
            j = least_diverse_member(items, P, metric)
            remaining = [x for x in items if x != j]
            pool = eligible.copy()
            pool[remaining] = False
            jpp = best_replacement(remaining, np.flatnonzero(pool), P, metric, all_scores, floor)

            if jpp is None or jpp == j:
                outside = pool.copy()
                outside[j] = False
                lower = all_scores[outside & (all_scores < floor)]
                if not _floor_can_drop(floor, lower):
                    trace.append(trace[-1])
                    floors.append(floor)
                    status = Status.FIXED_POINT
                    break
                floor *= cfg.discount
            else:
                items = remaining + [jpp]
                swaps += 1
            trace.append(min(1.0, nilld_ratio(items, P, metric, normalizer)))
            floors.append(floor)
        if status is None:
            status = Status.SATISFIED

    final = RecommendationList(
        user,
        tuple(items),
        tuple(all_scores[items].tolist()),
        rec.exclude_observed,
        rec.reranked,
    )
    if swaps:
        final = resort(final, reranked=True)
    return DiversifyOutcome(
        user=user,
        final_list=final,
        iterations=iterations,
        swaps=swaps,
        final_floor=floor,
        nilld_trace=tuple(trace),
        status=status,
        floor_trace=tuple(floors),
    )


def diversify_all(
    model: FactorModel,
    train: RatingsDataset | None,
    recs: Sequence[RecommendationList],
    cfg: DiversifyConfig,
    normalizer: MaxIlldResult | None = None,
    *,
    scores: np.ndarray | None = None,
) -> list[DiversifyOutcome]:
    """
    Run :func:`diversify_user` for every list with one shared normalizer.

    ``scores``, if given, is an ``n_users x n_items`` matrix of predicted
    ratings indexed by ``rec.user``.
    """
    if normalizer is None:
        normalizer = max_illd(model.P, cfg.k, cfg.metric)
    out = []
    for rec in recs:
        row = None if scores is None else scores[rec.user]
        out.append(diversify_user(model, train, rec, cfg, normalizer, scores=row))
    return out


OUTCOME_HEADER = ["user", "status", "iterations", "swaps", "final_floor", "final_nilld"]


def write_outcomes_csv(outcomes: Sequence[DiversifyOutcome], out: TextIO) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(OUTCOME_HEADER)
    for o in outcomes:
        writer.writerow(
            [o.user, o.status.value, o.iterations, o.swaps, repr(o.final_floor), repr(o.final_nilld)]
        )

