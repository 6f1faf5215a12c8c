"""Top-k recommendation lists and relevance metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Mapping

import numpy as np

from .dataset import RatingsDataset
from .factorization import FactorModel

DEFAULT_RELEVANCE = 4.0


class EmptyTruthError(ValueError):
    """The user has nothing to evaluate against; skip them rather than scoring 0."""


@dataclass(frozen=True)
class RecommendationList:
    """
    Ordered recommendations for one user.

    ``scores`` holds the predicted rating of each entry of ``items``.
    ``exclude_observed`` records whether training items were ineligible, and
    ``reranked`` is set once post-processing has touched the list.
    """

    user: int
    items: tuple[int, ...]
    scores: tuple[float, ...]
    exclude_observed: bool = True
    reranked: bool = False

    @property
    def k(self) -> int:
        return len(self.items)

    def __len__(self) -> int:
        return len(self.items)


def eligible_mask(train: RatingsDataset | None, user: int, n_items: int, exclude_observed: bool):
    mask = np.ones(n_items, dtype=bool)
    if exclude_observed and train is not None:
        mask[train.items_of(user)] = False
    return mask


def rank_items(scores: np.ndarray, candidates: np.ndarray, k: int) -> np.ndarray:
    """
    The ``k`` best of ``candidates`` by score, descending, ties by ascending index.
    """
    cand = np.asarray(candidates)
    if k > len(cand):
        raise ValueError(f"k={k} exceeds the {len(cand)} eligible items")
    order = np.lexsort((cand, -scores[cand]))
    return cand[order[:k]]


def top_k_from_scores(
    scores: np.ndarray,
    user: int,
    k: int,
    train: RatingsDataset | None = None,
    exclude_observed: bool = True,
) -> RecommendationList:
    if k < 1:
        raise ValueError("k must be >= 1")
    scores = np.asarray(scores, dtype=np.float64)
    mask = eligible_mask(train, user, len(scores), exclude_observed)
    chosen = rank_items(scores, np.flatnonzero(mask), k)
    return RecommendationList(
        user, tuple(chosen.tolist()), tuple(scores[chosen].tolist()), exclude_observed
    )


def top_k(
    model: FactorModel,
    train: RatingsDataset | None,
    i: int,
    k: int,
    exclude_observed: bool = True,
) -> RecommendationList:
    """
    Recommend the ``k`` highest-scoring eligible items to user ``i``.

    Args:
        model: trained factor model.
        train: training ratings; with ``exclude_observed`` the user's rated
            items are not eligible.
        i: user index.
        k: list length.
        exclude_observed: drop items the user rated in ``train``.

    Raises:
        ValueError: if fewer than ``k`` items are eligible.
    """
    return top_k_from_scores(model.scores(i), i, k, train, exclude_observed)


def top_k_all(
    model: FactorModel,
    train: RatingsDataset | None,
    k: int,
    exclude_observed: bool = True,
) -> list[RecommendationList]:
    return [top_k(model, train, i, k, exclude_observed) for i in range(model.n_users)]


def resort(rec: RecommendationList, reranked: bool = True) -> RecommendationList:
    """Re-order a list by score descending (ties by item index)."""
    items = np.array(rec.items, dtype=np.int64)
    scores = np.array(rec.scores, dtype=np.float64)
    order = np.lexsort((items, -scores))
    return replace(
        rec,
        items=tuple(items[order].tolist()),
        scores=tuple(scores[order].tolist()),
        reranked=reranked,
    )


def _cut(rec: RecommendationList, k: int | None) -> tuple[int, ...]:
    if k is None:
        return rec.items
    if k < 1:
        raise ValueError("k must be >= 1")
    return rec.items[:k]


def ndcg_at_k(rec: RecommendationList, truth: Mapping[int, float], k: int | None = None) -> float:
    """
    Normalized discounted cumulative gain with raw ratings as gains.

    Recommended items missing from ``truth`` have gain 0.  The ideal DCG uses
    the user's truth ratings sorted descending, truncated to ``k``.

    Raises:
        EmptyTruthError: if ``truth`` is empty.
    """
    if not truth:
        raise EmptyTruthError("no truth ratings for this user")
    items = _cut(rec, k)
    k = len(items) if k is None else k
    dcg = math.fsum(truth.get(j, 0.0) / math.log2(r + 2) for r, j in enumerate(items))
    ideal = sorted(truth.values(), reverse=True)[:k]
    idcg = math.fsum(g / math.log2(r + 2) for r, g in enumerate(ideal))
    if idcg <= 0:
        raise EmptyTruthError("ideal DCG is zero")
    return dcg / idcg


def _hits(items, truth: Mapping[int, float], threshold: float) -> int:
    return sum(1 for j in items if truth.get(j, -math.inf) >= threshold)


def precision_at_k(
    rec: RecommendationList,
    truth: Mapping[int, float],
    k: int | None = None,
    relevance_threshold: float = DEFAULT_RELEVANCE,
) -> float:
    items = _cut(rec, k)
    k = len(items) if k is None else k
    return _hits(items, truth, relevance_threshold) / k


def _n_relevant(truth: Mapping[int, float], threshold: float) -> int:
    n = sum(1 for g in truth.values() if g >= threshold)
    if n == 0:
        raise EmptyTruthError("user has no relevant items")
    return n


def recall_at_k(
    rec: RecommendationList,
    truth: Mapping[int, float],
    k: int | None = None,
    relevance_threshold: float = DEFAULT_RELEVANCE,
) -> float:
    total = _n_relevant(truth, relevance_threshold)
    return _hits(_cut(rec, k), truth, relevance_threshold) / total


def hit_rate_at_k(
    rec: RecommendationList,
    truth: Mapping[int, float],
    k: int | None = None,
    relevance_threshold: float = DEFAULT_RELEVANCE,
) -> int:
    """1 if any relevant item is recommended in the top ``k``, else 0."""
    _n_relevant(truth, relevance_threshold)
    return int(_hits(_cut(rec, k), truth, relevance_threshold) > 0)
