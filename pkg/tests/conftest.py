import os
from pathlib import Path

import numpy as np
import pytest

from latentdiv.dataset import RatingsDataset, SplitPair, load_ratings, split_holdout
from latentdiv.factorization import FactorModel, TrainConfig, train

ROOT = Path(__file__).resolve().parents[1]

# trace fixture: one user, four items on a line
TRACE_LATENT = [0.0, 1.0, 1.1, 7.0]
TRACE_SCORES = [5.0, 4.9, 4.8, 4.0]


def ml100k_path() -> Path | None:
    candidates = [os.environ.get("LATENTDIV_ML100K"), ROOT / "data" / "ml-100k" / "u.data"]
    for c in candidates:
        if c and Path(c).is_file():
            return Path(c)
    return None


@pytest.fixture(scope="session")
def ml100k_file():
    path = ml100k_path()
    if path is None:
        pytest.skip("MovieLens-100k not found; run scripts/fetch_ml100k.py")
    return path


@pytest.fixture(scope="session")
def ml100k(ml100k_file):
    return load_ratings(ml100k_file)


@pytest.fixture(scope="session")
def ml100k_split(ml100k):
    return split_holdout(ml100k, 0.2, seed=0)


@pytest.fixture(scope="session")
def ml100k_model(ml100k_split):
    config = TrainConfig(d=16, lambda_q=10.0, lambda_p=10.0, max_iters=30, seed=1)
    return train(ml100k_split.train, config)


@pytest.fixture
def trace_model():
    """d=1 item factors [0, 1, 1.1, 7]; scores are supplied separately."""
    return FactorModel(np.array([[1.0]]), np.array([TRACE_LATENT]))


@pytest.fixture
def trace_scores():
    return np.array(TRACE_SCORES)


# the same trace realized by a bilinear d=2 model: user (0, 1) sees the
# second coordinate as its score, the first coordinate spaces the items so
# that consecutive distances are 1, 0.1... and the far pair is exactly 7
PLANAR_P = np.array(
    [[0.0, np.sqrt(0.99), 1.1, np.sqrt(48.0)], [5.0, 4.9, 4.8, 4.0]]
)


def planar_trace(n_users: int = 1) -> tuple[FactorModel, SplitPair]:
    """Bilinear trace model plus a split where every user rated every item."""
    model = FactorModel(np.tile([0.0, 1.0], (n_users, 1)), PLANAR_P.copy())
    users = np.repeat(np.arange(n_users), 4)
    items = np.tile(np.arange(4), n_users)
    names = tuple(f"u{u}" for u in range(n_users)), ("a", "b", "c", "d")
    train = RatingsDataset(users, items, np.full(len(users), 3.0), *names)
    # held-out truth: item 3 (never in the top-2 baseline) is the one liked
    truth = np.tile([2.0, 1.0, 1.0, 5.0], n_users)
    test = RatingsDataset(users, items, truth, *names)
    return model, SplitPair(train, test)


_ACCEPTANCE: list[str] = []


@pytest.fixture
def acceptance_log():
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
