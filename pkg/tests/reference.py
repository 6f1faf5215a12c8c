"""Plain-Python re-statement of the swap loop, used as an oracle in tests."""

import itertools
import math

import numpy as np

from latentdiv.dataset import RatingsDataset
from latentdiv.factorization import FactorModel


def list_sum(points, items):
    return sum(math.dist(points[a], points[b]) for a, b in itertools.combinations(items, 2))


def simulate(points, scores, start, eligible, alpha, discount, max_iters, norm_value):
    """
    Run the loop on explicit Python lists.

    ``points[j]`` is item j's latent vector, ``eligible`` the items the user
    may receive.  Returns a dict with status, items, iterations, swaps,
    floor and trace.
    """

    def nilld(items):
        return 1.0 if norm_value == 0 else min(1.0, list_sum(points, items) / norm_value)

    items = list(start)
    floor = min(scores[j] for j in items)
    trace = [nilld(items)]
    iterations = swaps = 0
    status = "already_satisfied" if trace[-1] >= alpha else None
    while status is None and trace[-1] < alpha:
        if iterations >= max_iters:
            status = "max_iters_exceeded"
            break
        iterations += 1
        sums = {j: sum(math.dist(points[j], points[x]) for x in items) for j in items}
        j = min(items, key=lambda x: (sums[x], x))
        rest = [x for x in items if x != j]
        pool = [c for c in sorted(eligible) if c not in rest and scores[c] >= floor]
        best = None
        if pool:
            best = max(pool, key=lambda c: (sum(math.dist(points[c], points[x]) for x in rest), -c))
        if best is None or best == j:
            lower = [c for c in eligible if c not in items and 0 < scores[c] < floor]
            if floor <= 0 or not lower:
                trace.append(trace[-1])
                status = "fixed_point"
                break
            floor *= discount
        else:
            items = rest + [best]
            swaps += 1
        trace.append(nilld(items))
    if status is None:
        status = "satisfied"
    return {
        "status": status,
        "items": sorted(items),
        "iterations": iterations,
        "swaps": swaps,
        "floor": floor,
        "trace": trace,
    }


def random_instance(seed, max_items=30, max_k=8, n_users=3):
    """
    Random model, training set and list length.

    Half the instances have strictly positive scores; the rest use signed
    factors so that some predicted ratings are negative.
    """
    rng = np.random.default_rng(seed)
    m = int(rng.integers(4, max_items + 1))
    d = int(rng.integers(1, 5))
    if seed % 2:
        Q = rng.uniform(0.2, 1.5, (n_users, d))
        P = rng.uniform(0.2, 1.5, (d, m))
    else:
        Q = rng.normal(size=(n_users, d))
        P = rng.normal(size=(d, m))
    k = int(rng.integers(2, min(max_k, m - 2) + 1))
    # each user rates up to m - k items so k remain eligible
    users, items = [], []
    for u in range(n_users):
        n_rated = int(rng.integers(1, m - k + 1))
        for j in rng.choice(m, n_rated, replace=False):
            users.append(u)
            items.append(int(j))
    train = RatingsDataset(
        users, items, [3.0] * len(users),
        tuple(f"u{u}" for u in range(n_users)), tuple(f"i{j}" for j in range(m)),
    )
    alpha = float(rng.uniform(0, 1))
    discount = float(rng.uniform(0.5, 0.95))
    return FactorModel(Q, P), train, k, alpha, discount
