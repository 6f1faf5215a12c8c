import io
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latentdiv.dataset import (
    DatasetError,
    RatingsDataset,
    parse_ratings,
    split_holdout,
    validate,
)


def tab(*rows):
    return io.StringIO("".join("\t".join(map(str, r)) + "\n" for r in rows))


class TestParse:
    def test_two_lines(self):
        ds = parse_ratings(tab((1, 7, 4.0, 100), (2, 7, 5.0, 101)))
        assert ds.n_users == 2
        assert ds.n_items == 1
        assert ds.triples() == [(0, 0, 4.0), (1, 0, 5.0)]

    def test_first_appearance_order(self):
        ds = parse_ratings(tab((9, 30, 1, 0), (3, 20, 2, 0), (9, 20, 3, 0)))
        assert ds.user_ids == ("9", "3")
        assert ds.item_ids == ("30", "20")
        assert ds.triples() == [(0, 0, 1.0), (1, 1, 2.0), (0, 1, 3.0)]

    def test_rating_out_of_range(self):
        with pytest.raises(DatasetError, match="line 1: rating 9 out of range"):
            parse_ratings(tab((1, 7, 9.0, 100)))

    def test_rating_below_range(self):
        with pytest.raises(DatasetError, match="line 2"):
            parse_ratings(tab((1, 7, 4, 0), (1, 8, 0.5, 0)))

    def test_malformed_line_number(self):
        src = io.StringIO("1\t2\t3\t4\n1\t3\t4\n")
        with pytest.raises(DatasetError, match="line 2: expected 4 fields"):
            parse_ratings(src)

    def test_non_numeric_rating(self):
        with pytest.raises(DatasetError, match="line 1: rating 'x'"):
            parse_ratings(io.StringIO("1\t2\tx\t4\n"))

    def test_duplicate_pair(self):
        with pytest.raises(DatasetError, match="line 2: duplicate"):
            parse_ratings(tab((1, 7, 4, 0), (1, 7, 5, 1)))

    def test_empty(self):
        with pytest.raises(DatasetError, match="empty"):
            parse_ratings(io.StringIO(""))

    def test_csv_header(self):
        src = io.StringIO("userId,movieId,rating,timestamp\n1,31,2.5,1\n1,1029,3.0,2\n7,31,4,3\n")
        ds = parse_ratings(src, "csv_header")
        assert (ds.n_users, ds.n_items) == (2, 2)
        assert ds.triples() == [(0, 0, 2.5), (0, 1, 3.0), (1, 0, 4.0)]

    def test_csv_bad_header(self):
        with pytest.raises(DatasetError, match="line 1: expected header"):
            parse_ratings(io.StringIO("user,item,rating,ts\n1,2,3,4\n"), "csv_header")

    def test_csv_header_only_is_empty(self):
        with pytest.raises(DatasetError, match="empty"):
            parse_ratings(io.StringIO("userId,movieId,rating,timestamp\n"), "csv_header")

    def test_reparse_identical(self):
        text = "".join(f"{u}\t{i}\t{1 + (u * i) % 5}\t0\n" for u in range(5) for i in range(4))
        a = parse_ratings(io.StringIO(text))
        b = parse_ratings(io.StringIO(text))
        assert a == b

    def test_arrays_are_read_only(self):
        ds = parse_ratings(tab((1, 7, 4.0, 100)))
        with pytest.raises(ValueError):
            ds.ratings[0] = 1.0

    @pytest.mark.slow
    def test_movielens_100k_counts(self, ml100k_file):
        # independent count straight from the file
        users, items = set(), set()
        n = 0
        with open(ml100k_file) as f:
            for line in f:
                u, i, _, _ = line.split("\t")
                users.add(u)
                items.add(i)
                n += 1
        assert (len(users), len(items), n) == (943, 1682, 100000)

        from latentdiv.dataset import load_ratings

        ds = load_ratings(ml100k_file)
        assert (ds.n_users, ds.n_items, ds.n_ratings) == (943, 1682, 100000)


class TestValidate:
    def test_empty_column_rejected(self):
        ds = RatingsDataset([0], [0], [3.0], ("a",), ("x", "y"))
        with pytest.raises(DatasetError, match="item has no ratings"):
            validate(ds)
        validate(ds, require_full=False)

    def test_index_range(self):
        ds = RatingsDataset([0, 2], [0, 0], [3.0, 3.0], ("a", "b"), ("x",))
        with pytest.raises(DatasetError, match="user index out of range"):
            validate(ds)


def grid_dataset(n_users, n_items, seed=0, density=0.6):
    rng = np.random.default_rng(seed)
    mask = rng.random((n_users, n_items)) < density
    mask[np.arange(n_users), rng.integers(0, n_items, n_users)] = True
    mask[rng.integers(0, n_users, n_items), np.arange(n_items)] = True
    u, i = np.nonzero(mask)
    r = rng.integers(1, 6, len(u)).astype(float)
    return RatingsDataset(
        u, i, r, tuple(f"u{x}" for x in range(n_users)), tuple(f"i{x}" for x in range(n_items))
    )


class TestSplit:
    def test_floor_count_per_user(self):
        # one user with 10 ratings, each item also rated by a second user
        rows = [(0, i, 4.0) for i in range(10)] + [(1, i, 3.0) for i in range(10)]
        u, i, r = zip(*rows)
        ds = RatingsDataset(u, i, r, ("a", "b"), tuple(map(str, range(10))))
        split = split_holdout(ds, 0.2, seed=3)
        per_user = Counter(split.test.users.tolist())
        assert per_user[0] == 2

    def test_single_rating_user(self):
        ds = RatingsDataset([0, 1, 1], [0, 0, 1], [4, 4, 4], ("a", "b"), ("x", "y"))
        split = split_holdout(ds, 0.2, seed=0)
        assert 0 not in split.test.users

    def test_deterministic(self):
        ds = grid_dataset(30, 20, seed=1)
        a = split_holdout(ds, 0.3, seed=42)
        b = split_holdout(ds, 0.3, seed=42)
        assert a.train == b.train and a.test == b.test

    def test_seed_matters(self):
        ds = grid_dataset(30, 20, seed=1)
        assert split_holdout(ds, 0.3, seed=1).test != split_holdout(ds, 0.3, seed=2).test

    @pytest.mark.parametrize("fraction", [0.0, 1.0, -0.1, 1.5])
    def test_fraction_bounds(self, fraction):
        ds = grid_dataset(5, 5)
        with pytest.raises(ValueError):
            split_holdout(ds, fraction)

    def test_never_empties_columns(self):
        # item 1 rated once: the move would empty its column and is skipped
        ds = RatingsDataset([0, 0, 1, 1], [0, 1, 0, 2], [5, 5, 5, 5], ("a", "b"), ("x", "y", "z"))
        for seed in range(20):
            split = split_holdout(ds, 0.5, seed=seed)
            validate(split.train)

    @settings(max_examples=40, deadline=None)
    @given(
        n_users=st.integers(1, 12),
        n_items=st.integers(1, 12),
        seed=st.integers(0, 10_000),
        fraction=st.floats(0.05, 0.95),
    )
    def test_round_trip_and_train_valid(self, n_users, n_items, seed, fraction):
        ds = grid_dataset(n_users, n_items, seed=seed)
        split = split_holdout(ds, fraction, seed=seed)
        whole = Counter(ds.triples())
        assert Counter(split.train.triples()) + Counter(split.test.triples()) == whole
        assert not set(split.train.triples()) & set(split.test.triples())
        validate(split.train)
        assert split.train.user_ids == ds.user_ids
        assert split.test.item_ids == ds.item_ids
        counts = ds.user_counts()
        test_counts = np.bincount(split.test.users, minlength=ds.n_users)
        assert np.all(test_counts <= np.floor(fraction * counts))
