"""Rating data ingestion, validation and train/test splitting."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Literal, TextIO

import numpy as np
import scipy.sparse as sps

_logger = logging.getLogger(__name__)

RatingFormat = Literal["movielens_tab", "csv_header"]
CSV_HEADER = "userId,movieId,rating,timestamp"
RATING_MIN = 1.0
RATING_MAX = 5.0


class DatasetError(ValueError):
    """Raised for malformed or structurally invalid rating data."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class RatingsDataset:
    """
    Sparse observed ratings with dense user/item indexing.

    Ratings are stored as three aligned arrays (coordinate form).  The
    external-id maps are tuples where position ``i`` holds the external id of
    dense index ``i``.
    """

    users: np.ndarray
    items: np.ndarray
    ratings: np.ndarray
    user_ids: tuple[str, ...]
    item_ids: tuple[str, ...]
    _csr: sps.csr_array | None = field(default=None, init=False, repr=False)
    _csc: sps.csc_array | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "users", _frozen(np.asarray(self.users, dtype=np.int64)))
        object.__setattr__(self, "items", _frozen(np.asarray(self.items, dtype=np.int64)))
        object.__setattr__(self, "ratings", _frozen(np.asarray(self.ratings, dtype=np.float64)))
        if not (len(self.users) == len(self.items) == len(self.ratings)):
            raise DatasetError("users, items and ratings must have equal length")

    @property
    def n_users(self) -> int:
        return len(self.user_ids)

    @property
    def n_items(self) -> int:
        return len(self.item_ids)

    @property
    def n_ratings(self) -> int:
        return len(self.ratings)

    def __len__(self) -> int:
        return self.n_ratings

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RatingsDataset):
            return NotImplemented
        return (
            self.user_ids == other.user_ids
            and self.item_ids == other.item_ids
            and np.array_equal(self.users, other.users)
            and np.array_equal(self.items, other.items)
            and np.array_equal(self.ratings, other.ratings)
        )

    __hash__ = None  # type: ignore[assignment]

    def triples(self) -> list[tuple[int, int, float]]:
        return list(zip(self.users.tolist(), self.items.tolist(), self.ratings.tolist()))

    def user_major(self) -> sps.csr_array:
        """Ratings as an ``n_users x n_items`` CSR array (cached)."""
        if self._csr is None:
            mat = sps.csr_array(
                (self.ratings, (self.users, self.items)), shape=(self.n_users, self.n_items)
            )
            mat.sort_indices()
            object.__setattr__(self, "_csr", mat)
        return self._csr

    def item_major(self) -> sps.csc_array:
        """Ratings as an ``n_users x n_items`` CSC array (cached)."""
        if self._csc is None:
            mat = sps.csc_array(
                (self.ratings, (self.users, self.items)), shape=(self.n_users, self.n_items)
            )
            mat.sort_indices()
            object.__setattr__(self, "_csc", mat)
        return self._csc

    def user_counts(self) -> np.ndarray:
        return np.bincount(self.users, minlength=self.n_users)

    def item_counts(self) -> np.ndarray:
        return np.bincount(self.items, minlength=self.n_items)

    def items_of(self, user: int) -> np.ndarray:
        """Item indexes rated by ``user`` (ascending)."""
        mat = self.user_major()
        return mat.indices[mat.indptr[user] : mat.indptr[user + 1]]

    def truth_of(self, user: int) -> dict[int, float]:
        """Map of item index to rating for one user."""
        mat = self.user_major()
        sl = slice(mat.indptr[user], mat.indptr[user + 1])
        return dict(zip(mat.indices[sl].tolist(), mat.data[sl].tolist()))

    def subset(self, mask: np.ndarray) -> RatingsDataset:
        """Select ratings by boolean mask, keeping the index maps."""
        return RatingsDataset(
            self.users[mask], self.items[mask], self.ratings[mask], self.user_ids, self.item_ids
        )


def validate(ds: RatingsDataset, *, require_full: bool = True) -> None:
    """
    Check the structural invariants of a dataset, raising :class:`DatasetError`.

    Args:
        ds: dataset to check.
        require_full: also require that every user and every item has at
            least one rating.  Test splits do not satisfy this.
    """
    if ds.n_ratings == 0:
        raise DatasetError("dataset has no ratings")
    if ds.users.min() < 0 or ds.users.max() >= ds.n_users:
        raise DatasetError("user index out of range")
    if ds.items.min() < 0 or ds.items.max() >= ds.n_items:
        raise DatasetError("item index out of range")
    if not np.all(np.isfinite(ds.ratings)):
        raise DatasetError("non-finite rating")
    bad = (ds.ratings < RATING_MIN) | (ds.ratings > RATING_MAX)
    if bad.any():
        pos = int(np.flatnonzero(bad)[0])
        raise DatasetError(f"rating {ds.ratings[pos]} outside [{RATING_MIN:g}, {RATING_MAX:g}]")
    keys = ds.users * ds.n_items + ds.items
    if len(np.unique(keys)) != len(keys):
        raise DatasetError("duplicate (user, item) pair")
    if len(set(ds.user_ids)) != ds.n_users or len(set(ds.item_ids)) != ds.n_items:
        raise DatasetError("external id maps are not bijections")
    if require_full:
        if (ds.user_counts() == 0).any():
            raise DatasetError("some user has no ratings")
        if (ds.item_counts() == 0).any():
            raise DatasetError("some item has no ratings")


def _records(source: TextIO, format: RatingFormat) -> Iterable[tuple[int, str, str, str]]:
    if format == "movielens_tab":
        sep, n_fields = "\t", 4
    elif format == "csv_header":
        sep, n_fields = ",", 4
    else:
        raise ValueError(f"unknown rating format {format!r}")

    for lineno, line in enumerate(source, start=1):
        line = line.rstrip("\r\n")
        if format == "csv_header" and lineno == 1:
            if line.strip() != CSV_HEADER:
                raise DatasetError(f"line 1: expected header {CSV_HEADER!r}, got {line!r}")
            continue
        if not line.strip():
            continue
        fields = line.split(sep)
        if len(fields) != n_fields:
            raise DatasetError(f"line {lineno}: expected {n_fields} fields, got {len(fields)}")
        yield lineno, fields[0].strip(), fields[1].strip(), fields[2].strip()


def parse_ratings(source: TextIO, format: RatingFormat = "movielens_tab") -> RatingsDataset:
    """
    Parse a MovieLens-style rating file.

    External ids are mapped to dense indexes in order of first appearance.
    Timestamps are read but discarded.

    Args:
        source: text stream with the rating lines.
        format: ``"movielens_tab"`` (``u.data``: user, item, rating,
            timestamp separated by tabs, no header) or ``"csv_header"``
            (``ratings.csv`` with header ``userId,movieId,rating,timestamp``).

    Returns:
        A validated :class:`RatingsDataset`.

    Raises:
        DatasetError: on malformed lines, out-of-range ratings, duplicate
            pairs, or empty input.  Messages carry the offending line number.
    """
    user_index: dict[str, int] = {}
    item_index: dict[str, int] = {}
    users: list[int] = []
    items: list[int] = []
    ratings: list[float] = []
    seen: dict[tuple[int, int], int] = {}

    for lineno, uid, iid, rtext in _records(source, format):
        if not uid or not iid:
            raise DatasetError(f"line {lineno}: empty id field")
        try:
            rating = float(rtext)
        except ValueError:
            raise DatasetError(f"line {lineno}: rating {rtext!r} is not a number") from None
        if not (RATING_MIN <= rating <= RATING_MAX):
            raise DatasetError(
                f"line {lineno}: rating {rating:g} out of range [{RATING_MIN:g}, {RATING_MAX:g}]"
            )
        u = user_index.setdefault(uid, len(user_index))
        i = item_index.setdefault(iid, len(item_index))
        if (u, i) in seen:
            raise DatasetError(
                f"line {lineno}: duplicate rating for user {uid!r}, item {iid!r} "
                f"(first seen on line {seen[u, i]})"
            )
        seen[u, i] = lineno
        users.append(u)
        items.append(i)
        ratings.append(rating)

    if not ratings:
        raise DatasetError("empty input: no rating lines")

    ds = RatingsDataset(
        np.array(users), np.array(items), np.array(ratings), tuple(user_index), tuple(item_index)
    )
    validate(ds)
    _logger.info("parsed %d ratings (%d users, %d items)", ds.n_ratings, ds.n_users, ds.n_items)
    return ds


def load_ratings(path, format: RatingFormat = "movielens_tab") -> RatingsDataset:
    """Open ``path`` and parse it with :func:`parse_ratings`."""
    with open(path, encoding="utf-8") as f:
        return parse_ratings(f, format)


@dataclass(frozen=True)
class SplitPair:
    train: RatingsDataset
    test: RatingsDataset


def split_holdout(ds: RatingsDataset, test_fraction: float = 0.2, seed: int = 0) -> SplitPair:
    """
    Per-user holdout split.

    For each user (in index order) ``floor(test_fraction * count)`` of their
    ratings are drawn uniformly without replacement.  A drawn rating moves to
    the test set unless that would leave its user or item without training
    ratings; such moves are skipped, not re-drawn.
    """
    if not (0.0 < test_fraction < 1.0):
        raise ValueError(f"test_fraction must lie in (0, 1), got {test_fraction}")

    rng = np.random.default_rng(seed)
    csr_order = np.lexsort((ds.items, ds.users))
    user_counts = ds.user_counts()
    item_left = ds.item_counts().copy()
    user_left = user_counts.copy()
    starts = np.concatenate([[0], np.cumsum(user_counts)])
    in_test = np.zeros(ds.n_ratings, dtype=bool)

    for u in range(ds.n_users):
        n_take = int(np.floor(test_fraction * user_counts[u]))
        if n_take == 0:
            continue
        rows = csr_order[starts[u] : starts[u + 1]]
        for pos in rng.permutation(len(rows))[:n_take]:
            r = rows[pos]
            item = ds.items[r]
            if user_left[u] <= 1 or item_left[item] <= 1:
                continue
            in_test[r] = True
            user_left[u] -= 1
            item_left[item] -= 1

    return SplitPair(ds.subset(~in_test), ds.subset(in_test))
