"""Baseline measurement and alpha sweeps, reported as CSV."""

from __future__ import annotations

import csv
import dataclasses
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, TextIO

import numpy as np

from .dataset import SplitPair
from .diversity import DistanceMetric, MaxIlldResult, _metric, max_illd, nilld_overall
from .factorization import FactorModel
from .postprocess import DiversifyConfig, DiversifyOutcome, diversify_all
from .ranking import (
    DEFAULT_RELEVANCE,
    EmptyTruthError,
    RecommendationList,
    hit_rate_at_k,
    ndcg_at_k,
    precision_at_k,
    recall_at_k,
    top_k_all,
)

_logger = logging.getLogger(__name__)

DEFAULT_ALPHAS = tuple(round(0.1 * i, 1) for i in range(1, 10))


@dataclass(frozen=True)
class SweepRow:
    alpha: float
    mean_ndcg: float
    mean_precision: float
    mean_recall: float
    mean_hit_rate: float
    overall_nilld: float
    min_user_nilld: float
    max_user_nilld: float
    std_user_nilld: float
    fraction_satisfied: float
    mean_swaps: float
    mean_iterations: float
    clamp_count: int


SWEEP_HEADER = [f.name for f in dataclasses.fields(SweepRow)]
EXPOSURE_HEADER = ["item", "baseline_count", "postprocessed_count"]


def _mean(values: Sequence[float]) -> float:
    return math.fsum(values) / len(values) if values else math.nan


def _relevance(recs, split: SplitPair, k: int, threshold: float):
    ndcg, prec, rec_, hit = [], [], [], []
    for r in recs:
        truth = split.test.truth_of(r.user)
        try:
            ndcg.append(ndcg_at_k(r, truth, k))
        except EmptyTruthError:
            continue
        prec.append(precision_at_k(r, truth, k, threshold))
        try:
            rec_.append(recall_at_k(r, truth, k, threshold))
            hit.append(float(hit_rate_at_k(r, truth, k, threshold)))
        except EmptyTruthError:
            pass
    return _mean(ndcg), _mean(prec), _mean(rec_), _mean(hit)


def evaluate_lists(
    model: FactorModel,
    split: SplitPair,
    recs: Sequence[RecommendationList],
    alpha: float,
    metric,
    normalizer: MaxIlldResult,
    outcomes: Sequence[DiversifyOutcome] | None = None,
    relevance_threshold: float = DEFAULT_RELEVANCE,
) -> SweepRow:
    """Aggregate relevance and diversity statistics of a set of lists into one row."""
    k = normalizer.k
    report = nilld_overall(recs, model.P, metric, normalizer)
    values = report.per_user_nilld
    mean = report.overall_nilld
    std = math.sqrt(math.fsum((v - mean) ** 2 for v in values) / len(values))
    ndcg, prec, recall, hit = _relevance(recs, split, k, relevance_threshold)
    swaps = [o.swaps for o in outcomes] if outcomes else [0] * len(recs)
    iters = [o.iterations for o in outcomes] if outcomes else [0] * len(recs)
    return SweepRow(
        alpha=float(alpha),
        mean_ndcg=ndcg,
        mean_precision=prec,
        mean_recall=recall,
        mean_hit_rate=hit,
        overall_nilld=mean,
        min_user_nilld=min(values),
        max_user_nilld=max(values),
        std_user_nilld=std,
        fraction_satisfied=sum(1 for v in values if v >= alpha) / len(values),
        mean_swaps=_mean(swaps),
        mean_iterations=_mean(iters),
        clamp_count=report.clamp_count,
    )


def baseline_lists(
    model: FactorModel, split: SplitPair, k: int, exclude_observed: bool = True
) -> list[RecommendationList]:
    return top_k_all(model, split.train, k, exclude_observed)


def run_baseline(
    model: FactorModel,
    split: SplitPair,
    k: int,
    metric=DistanceMetric.EUCLIDEAN,
    *,
    normalizer: MaxIlldResult | None = None,
    exclude_observed: bool = True,
    relevance_threshold: float = DEFAULT_RELEVANCE,
) -> SweepRow:
    """
    Measure the plain top-k recommender: relevance against the test set and
    nILLD statistics, with ``alpha = 0`` and no post-processing.
    """
    model.check_covers(split.train)
    metric = _metric(metric)
    if normalizer is None:
        normalizer = max_illd(model.P, k, metric)
    recs = baseline_lists(model, split, k, exclude_observed)
    return evaluate_lists(
        model, split, recs, 0.0, metric, normalizer, relevance_threshold=relevance_threshold
    )


@dataclass
class SweepResult:
    rows: list[SweepRow]
    baseline: list[RecommendationList]
    lists: dict[float, list[RecommendationList]]
    outcomes: dict[float, list[DiversifyOutcome]]
    normalizer: MaxIlldResult


def sweep(
    model: FactorModel,
    split: SplitPair,
    k: int,
    metric=DistanceMetric.EUCLIDEAN,
    alphas: Sequence[float] = DEFAULT_ALPHAS,
    discount: float = 0.9,
    max_iters: int | None = None,
    *,
    normalizer: MaxIlldResult | None = None,
    exclude_observed: bool = True,
    relevance_threshold: float = DEFAULT_RELEVANCE,
) -> SweepResult:
    """:func:`run_sweep` that also returns the lists and outcomes behind each row."""
    alphas = [float(a) for a in alphas]
    if any(b < a for a, b in zip(alphas, alphas[1:])):
        raise ValueError("alphas must be sorted ascending")
    if any(not (0.0 <= a <= 1.0) for a in alphas):
        raise ValueError("alphas must lie in [0, 1]")
    model.check_covers(split.train)
    metric = _metric(metric)
    if normalizer is None:
        normalizer = max_illd(model.P, k, metric)
    baseline = baseline_lists(model, split, k, exclude_observed)

    result = SweepResult([], baseline, {}, {}, normalizer)
    for alpha in alphas:
        cfg = DiversifyConfig(alpha, k, metric, discount, max_iters)
        outcomes = diversify_all(model, split.train, list(baseline), cfg, normalizer)
        lists = [o.final_list for o in outcomes]
        row = evaluate_lists(
            model, split, lists, alpha, metric, normalizer, outcomes, relevance_threshold
        )
        _logger.info(
            "alpha %.3f: nilld %.4f ndcg %.4f satisfied %.3f",
            alpha,
            row.overall_nilld,
            row.mean_ndcg,
            row.fraction_satisfied,
        )
        result.rows.append(row)
        result.lists[alpha] = lists
        result.outcomes[alpha] = outcomes
    return result


def run_sweep(
    model: FactorModel,
    split: SplitPair,
    k: int,
    metric=DistanceMetric.EUCLIDEAN,
    alphas: Sequence[float] = DEFAULT_ALPHAS,
    discount: float = 0.9,
    max_iters: int | None = None,
    **kwargs,
) -> list[SweepRow]:
    """
    One row per ``alpha``: post-process fresh copies of the baseline lists,
    then score them against held-out ratings.

    Args:
        model: trained model covering ``split``.
        split: train/test pair; relevance is measured on ``split.test``.
        k: list length.
        metric: latent distance.
        alphas: diversity thresholds, ascending, within ``[0, 1]``.
        discount: floor discount rate of the swap loop.
        max_iters: iteration cap per user (``None``: ``50 * k``).
    """
    return sweep(model, split, k, metric, alphas, discount, max_iters, **kwargs).rows


def _format(value) -> str:
    return repr(float(value)) if isinstance(value, float) else str(value)


def emit_report(rows: Sequence[SweepRow], destination: TextIO | str | Path) -> None:
    """Write sweep rows as CSV (header always present; floats in round-trip form)."""
    if isinstance(destination, (str, Path)):
        with open(destination, "w", encoding="utf-8", newline="") as f:
            emit_report(rows, f)
        return
    writer = csv.writer(destination, lineterminator="\n")
    writer.writerow(SWEEP_HEADER)
    for row in rows:
        writer.writerow([_format(getattr(row, name)) for name in SWEEP_HEADER])


def exposure_counts(recs: Sequence[RecommendationList], n_items: int) -> np.ndarray:
    """How many lists each item appears in."""
    counts = np.zeros(n_items, dtype=np.int64)
    for r in recs:
        counts[list(r.items)] += 1
    return counts


def emit_exposure(
    baseline: Sequence[RecommendationList],
    postprocessed: Sequence[RecommendationList],
    n_items: int,
    destination: TextIO | str | Path,
) -> None:
    if isinstance(destination, (str, Path)):
        with open(destination, "w", encoding="utf-8", newline="") as f:
            emit_exposure(baseline, postprocessed, n_items, f)
        return
    before = exposure_counts(baseline, n_items)
    after = exposure_counts(postprocessed, n_items)
    writer = csv.writer(destination, lineterminator="\n")
    writer.writerow(EXPOSURE_HEADER)
    for j in range(n_items):
        writer.writerow([j, int(before[j]), int(after[j])])
