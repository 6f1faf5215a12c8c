"""Latent-factor rating model trained by alternating least squares."""

from __future__ import annotations

import io
import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
import scipy.linalg

from .dataset import RatingsDataset

_logger = logging.getLogger(__name__)

MODEL_MAGIC = b"LATENTDIV-MF\x00v1\n"


class SingularSystemError(np.linalg.LinAlgError):
    """A per-row ridge system could not be solved (use a positive regularizer)."""


@dataclass(frozen=True)
class TrainConfig:
    """
    ALS training settings.

    ``lambda_q`` and ``lambda_p`` weight the squared L2 penalties on user rows
    and item columns.  ``init_scale`` defaults to ``1/sqrt(d)``.
    """

    d: int = 16
    lambda_q: float = 0.05
    lambda_p: float = 0.05
    max_iters: int = 50
    tolerance: float = 1e-5
    init_scale: float | None = None
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.d, (int, np.integer)) or self.d < 1:
            raise ValueError(f"d must be a positive integer, got {self.d!r}")
        if self.lambda_q < 0 or self.lambda_p < 0:
            raise ValueError("regularization weights must be >= 0")
        if self.max_iters < 0:
            raise ValueError("max_iters must be >= 0")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be > 0")
        if self.init_scale is not None and self.init_scale < 0:
            raise ValueError("init_scale must be >= 0")

    @property
    def scale(self) -> float:
        return 1.0 / math.sqrt(self.d) if self.init_scale is None else float(self.init_scale)


@dataclass
class TrainReport:
    iterations_run: int = 0
    loss_history: list[float] = field(default_factory=list)
    rmse_history: list[float] = field(default_factory=list)
    final_train_rmse: float = math.nan
    converged: bool = False


@dataclass(eq=False)
class FactorModel:
    """
    User factors ``Q`` (``n x d``) and item factors ``P`` (``d x m``).

    The predicted rating of user ``i`` for item ``j`` is ``Q[i] @ P[:, j]``.
    """

    Q: np.ndarray
    P: np.ndarray
    config: TrainConfig = field(default_factory=TrainConfig)
    meta: TrainReport = field(default_factory=TrainReport)

    def __post_init__(self):
        self.Q = np.asarray(self.Q, dtype=np.float64)
        self.P = np.asarray(self.P, dtype=np.float64)
        if self.Q.ndim != 2 or self.P.ndim != 2 or self.Q.shape[1] != self.P.shape[0]:
            raise ValueError(f"incompatible factor shapes {self.Q.shape} and {self.P.shape}")

    @property
    def n_users(self) -> int:
        return self.Q.shape[0]

    @property
    def n_items(self) -> int:
        return self.P.shape[1]

    @property
    def d(self) -> int:
        return self.Q.shape[1]

    def item_vectors(self) -> np.ndarray:
        """Item latent vectors as rows (``m x d``)."""
        return self.P.T

    def scores(self, user: int) -> np.ndarray:
        """Predicted ratings of one user for every item."""
        return self.Q[user] @ self.P

    def check_covers(self, ds: RatingsDataset) -> None:
        if ds.n_users != self.n_users or ds.n_items != self.n_items:
            raise ValueError(
                f"model is {self.n_users}x{self.n_items} but data is {ds.n_users}x{ds.n_items}"
            )


def init_factors(n: int, m: int, config: TrainConfig) -> FactorModel:
    """Draw ``Q`` then ``P`` i.i.d. uniform on ``[0, init_scale]``."""
    if n < 1 or m < 1:
        raise ValueError("need at least one user and one item")
    rng = np.random.default_rng(config.seed)
    scale = config.scale
    Q = rng.uniform(0.0, 1.0, size=(n, config.d)) * scale
    P = rng.uniform(0.0, 1.0, size=(config.d, m)) * scale
    return FactorModel(Q, P, config)


def _residuals(R: RatingsDataset, Q: np.ndarray, P: np.ndarray) -> np.ndarray:
    pred = np.einsum("ij,ji->i", Q[R.users], P[:, R.items])
    return R.ratings - pred


def loss(R: RatingsDataset, model: FactorModel, lambda_q: float, lambda_p: float) -> float:
    """
    Regularized squared error over the observed ratings.

    ``sum (r - q_i.p_j)^2 + lambda_q * sum ||q_i||^2 + lambda_p * sum ||p_j||^2``
    """
    model.check_covers(R)
    err = _residuals(R, model.Q, model.P)
    return float(
        np.dot(err, err)
        + lambda_q * np.sum(model.Q * model.Q)
        + lambda_p * np.sum(model.P * model.P)
    )


def loss_gradient(
    R: RatingsDataset, model: FactorModel, lambda_q: float, lambda_p: float
) -> tuple[np.ndarray, np.ndarray]:
    """Analytic gradient of :func:`loss` with respect to ``Q`` and ``P``."""
    model.check_covers(R)
    err = _residuals(R, model.Q, model.P)
    gQ = 2.0 * lambda_q * model.Q
    gP = 2.0 * lambda_p * model.P
    np.add.at(gQ, R.users, -2.0 * err[:, None] * model.P[:, R.items].T)
    np.add.at(gP.T, R.items, -2.0 * err[:, None] * model.Q[R.users])
    return gQ, gP


def _ridge_rows(
    indptr: np.ndarray,
    indices: np.ndarray,
    values: np.ndarray,
    other: np.ndarray,
    reg: float,
    current: np.ndarray,
    what: str,
) -> np.ndarray:
    # other: (count, d) vectors of the fixed side; one ridge solve per row
    d = other.shape[1]
    out = current.copy()
    eye = reg * np.eye(d)
    for row in range(len(indptr) - 1):
        lo, hi = indptr[row], indptr[row + 1]
        if lo == hi:
            continue
        X = other[indices[lo:hi]]
        A = X.T @ X + eye
        b = X.T @ values[lo:hi]
        try:
            factor = scipy.linalg.cho_factor(A, lower=True, check_finite=False)
        except np.linalg.LinAlgError:
            raise SingularSystemError(
                f"singular normal equations for {what} {row}; "
                "its observations span fewer than d dimensions, use a positive regularizer"
            ) from None
        out[row] = scipy.linalg.cho_solve(factor, b, check_finite=False)
    return out


def als_half_step_users(R: RatingsDataset, model: FactorModel, lambda_q: float) -> np.ndarray:
    """
    Exact ridge update of every user row with ``P`` held fixed.

    Each ``q_i`` solves ``(P_i P_i^T + lambda_q I) q_i = P_i r_i`` where
    ``P_i`` holds the factor columns of the items user ``i`` rated.

    Returns:
        The new ``Q`` (the model is not modified).
    """
    model.check_covers(R)
    csr = R.user_major()
    return _ridge_rows(csr.indptr, csr.indices, csr.data, model.P.T, lambda_q, model.Q, "user")


def als_half_step_items(R: RatingsDataset, model: FactorModel, lambda_p: float) -> np.ndarray:
    """Mirror of :func:`als_half_step_users`: returns the new ``P`` with ``Q`` fixed."""
    model.check_covers(R)
    csc = R.item_major()
    cols = _ridge_rows(csc.indptr, csc.indices, csc.data, model.Q, lambda_p, model.P.T, "item")
    return np.ascontiguousarray(cols.T)


def train(R: RatingsDataset, config: TrainConfig) -> FactorModel:
    """
    Fit a :class:`FactorModel` by alternating least squares.

    Starting from :func:`init_factors`, each iteration updates user rows and
    then item columns.  Training stops once the relative loss change drops
    below ``config.tolerance`` or after ``config.max_iters`` iterations.
    """
    model = init_factors(R.n_users, R.n_items, config)
    report = model.meta
    prev = loss(R, model, config.lambda_q, config.lambda_p)

    for it in range(config.max_iters):
        model.Q = als_half_step_users(R, model, config.lambda_q)
        model.P = als_half_step_items(R, model, config.lambda_p)
        cur = loss(R, model, config.lambda_q, config.lambda_p)
        report.iterations_run = it + 1
        report.loss_history.append(cur)
        report.rmse_history.append(rmse(model, R))
        _logger.debug("iteration %d: loss %.6f rmse %.6f", it + 1, cur, report.rmse_history[-1])
        change = abs(prev - cur) / max(abs(prev), np.finfo(float).tiny)
        prev = cur
        if change < config.tolerance:
            report.converged = True
            break

    report.final_train_rmse = rmse(model, R)
    _logger.info(
        "trained d=%d for %d iterations, train rmse %.4f",
        config.d,
        report.iterations_run,
        report.final_train_rmse,
    )
    return model


def predict(model: FactorModel, i: int, j: int) -> float:
    """Raw (unclamped) predicted rating ``q_i . p_j``."""
    if not (0 <= i < model.n_users):
        raise IndexError(f"user index {i} out of range")
    if not (0 <= j < model.n_items):
        raise IndexError(f"item index {j} out of range")
    return float(model.Q[i] @ model.P[:, j])


def rmse(model: FactorModel, ds: RatingsDataset) -> float:
    if ds.n_ratings == 0:
        raise ValueError("cannot compute RMSE of an empty dataset")
    if ds.users.max() >= model.n_users or ds.items.max() >= model.n_items:
        raise ValueError("dataset indexes exceed model dimensions")
    err = _residuals(ds, model.Q, model.P)
    return math.sqrt(float(np.dot(err, err)) / len(err))


def save_model(model: FactorModel, path) -> None:
    """
    Write a model artifact.

    The file is a magic header followed by an ``.npz`` archive holding ``Q``
    (row-major), ``P`` (column-major), the training config and report.
    """
    meta = {"config": asdict(model.config), "report": asdict(model.meta)}
    buf = io.BytesIO()
    np.savez(
        buf,
        Q=np.ascontiguousarray(model.Q),
        P=np.asfortranarray(model.P),
        meta=np.frombuffer(json.dumps(meta, sort_keys=True).encode(), dtype=np.uint8),
    )
    Path(path).write_bytes(MODEL_MAGIC + buf.getvalue())


def load_model(path) -> FactorModel:
    raw = Path(path).read_bytes()
    if not raw.startswith(MODEL_MAGIC):
        raise ValueError(f"{path}: not a latentdiv model artifact (bad magic header)")
    with np.load(io.BytesIO(raw[len(MODEL_MAGIC) :]), allow_pickle=False) as npz:
        Q = npz["Q"]
        P = npz["P"]
        meta = json.loads(npz["meta"].tobytes().decode())
    config = TrainConfig(**meta["config"])
    report = TrainReport(**meta["report"])
    return FactorModel(Q, P, config, report)


def with_factors(model: FactorModel, Q=None, P=None) -> FactorModel:
    """Copy of ``model`` with one or both factor matrices replaced."""
    return replace(model, Q=model.Q if Q is None else Q, P=model.P if P is None else P)
