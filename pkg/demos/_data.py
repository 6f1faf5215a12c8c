"""Shared loader: MovieLens-100k when present, otherwise a small synthetic set."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from latentdiv.dataset import RatingsDataset, load_ratings

ML100K = Path(__file__).resolve().parents[1] / "data" / "ml-100k" / "u.data"


def ratings() -> RatingsDataset:
    if ML100K.is_file():
        return load_ratings(ML100K)
    print(f"({ML100K} not found: using synthetic ratings; see scripts/fetch_ml100k.py)")
    rng = np.random.default_rng(0)
    n, m, d = 300, 400, 4
    taste = rng.normal(size=(n, d)) @ rng.normal(size=(d, m))
    mask = rng.random((n, m)) < 0.08
    mask[np.arange(n), rng.integers(0, m, n)] = True
    mask[rng.integers(0, n, m), np.arange(m)] = True
    users, items = np.nonzero(mask)
    stars = np.clip(np.rint(3 + taste[users, items] / 2), 1, 5)
    return RatingsDataset(users, items, stars, tuple(map(str, range(n))), tuple(map(str, range(m))))
