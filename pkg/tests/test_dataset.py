import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kernelgamma.dataset import (
    DataError, Dataset, apply_scaling, fit_scaling, load, load_builtin, load_split,
    parse_csv, parse_sparse, save_split, split_indices, stratified_split, to_sparse,
)


class TestParseSparse:
    def test_basic(self):
        ds = parse_sparse("+1 1:0.5 3:2.0\n-1 2:1.0")
        assert ds.n_samples == 2 and ds.feature_dim == 3
        np.testing.assert_array_equal(ds.X, [[0.5, 0, 2.0], [0, 1.0, 0]])
        # labels sorted: -1 -> 0, +1 -> 1
        assert ds.labels == (-1, 1)
        np.testing.assert_array_equal(ds.y, [1, 0])

    def test_bytes_input(self):
        ds = parse_sparse(b"3 1:1\n7 2:1\n3 1:2")
        assert ds.labels == (3, 7)
        assert ds.class_sizes().tolist() == [2, 1]

    def test_empty(self):
        with pytest.raises(DataError, match="empty"):
            parse_sparse("")

    def test_malformed_reports_line(self):
        with pytest.raises(DataError, match="line 2"):
            parse_sparse("1 2:1\n1 1:x")

    @pytest.mark.parametrize("text", ["1 2:1 1:3", "1 0:1", "1 1:1 1:2"])
    def test_indices_must_increase_from_one(self, text):
        with pytest.raises(DataError):
            parse_sparse(text)

    def test_missing_colon(self):
        with pytest.raises(DataError, match="line 1"):
            parse_sparse("1 3")

    def test_comments_and_blank_lines(self):
        ds = parse_sparse("# header\n\n1 1:1  # trailing\n2 2:1\n")
        assert ds.n_samples == 2


class TestParseCsv:
    def test_basic(self):
        ds = parse_csv("1,0.5,2.0\n2,1.0,0.0", label_column=0)
        assert ds.n_samples == 2 and ds.feature_dim == 2
        np.testing.assert_array_equal(ds.X, [[0.5, 2.0], [1.0, 0.0]])

    def test_header_skipped(self):
        ds = parse_csv("y,a,b\n1,0.5,2.0\n2,1.0,0.0")
        assert ds.n_samples == 2

    def test_ragged(self):
        with pytest.raises(DataError, match="ragged"):
            parse_csv("1,0.5\n2,1.0,3.0")

    def test_non_numeric_cell(self):
        with pytest.raises(DataError, match="non-numeric"):
            parse_csv("1,0.5\n2,abc")

    def test_last_column_label(self):
        ds = parse_csv("0.5,2.0,1\n1.0,0.0,2", label_column=-1)
        np.testing.assert_array_equal(ds.X, [[0.5, 2.0], [1.0, 0.0]])
        assert ds.labels == (1, 2)


class TestDataset:
    def test_class_index_partitions(self, rng):
        y = rng.integers(0, 4, 50)
        y[:4] = [0, 1, 2, 3]
        ds = Dataset(rng.random((50, 3)), y, (0, 1, 2, 3))
        idx = np.sort(np.concatenate(list(ds.class_index.values())))
        np.testing.assert_array_equal(idx, np.arange(50))

    def test_rejects_nan(self):
        with pytest.raises(DataError):
            Dataset([[np.nan]], [0], (0,))

    def test_rejects_bad_label(self):
        with pytest.raises(DataError):
            Dataset([[0.0], [1.0]], [0, 2], (0, 1))

    def test_immutable(self):
        ds = Dataset([[0.0], [1.0]], [0, 1], (0, 1))
        with pytest.raises(ValueError):
            ds.X[0, 0] = 5


class TestScaling:
    def test_endpoints(self):
        ds = Dataset([[0.0], [5.0], [10.0]], [0, 0, 0], (0,))
        out = apply_scaling(ds, fit_scaling(ds, (0, 1)))
        np.testing.assert_allclose(out.X[:, 0], [0, 0.5, 1])

    def test_constant_column_midpoint(self):
        ds = Dataset([[3.0], [3.0], [3.0]], [0, 0, 0], (0,))
        out = apply_scaling(ds, fit_scaling(ds, (-1, 1)))
        np.testing.assert_array_equal(out.X[:, 0], [0, 0, 0])

    def test_extrapolation(self):
        train = Dataset([[0.0], [10.0]], [0, 0], (0,))
        spec = fit_scaling(train, (0, 1))
        unseen = Dataset([[12.0]], [0], (0,))
        assert apply_scaling(unseen, spec).X[0, 0] == pytest.approx(1.2)

    def test_dimension_mismatch(self):
        spec = fit_scaling(Dataset([[0.0], [1.0]], [0, 0], (0,)))
        with pytest.raises(DataError, match="dimension"):
            apply_scaling(Dataset([[0.0, 1.0]], [0], (0,)), spec)

    def test_bad_range(self):
        with pytest.raises(DataError):
            fit_scaling(Dataset([[0.0]], [0], (0,)), (1, 1))

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 10_000), st.floats(-5, 5), st.floats(0.1, 10))
    def test_train_within_range(self, seed, lo, width):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(20, 4)) * rng.uniform(0.01, 100, 4)
        ds = Dataset(X, np.zeros(20, dtype=int), (0,))
        hi = lo + width
        out = apply_scaling(ds, fit_scaling(ds, (lo, hi))).X
        assert out.min() >= lo - 1e-12 and out.max() <= hi + 1e-12


class TestSplit:
    def _ds(self, per_class=10, n_classes=2):
        y = np.repeat(np.arange(n_classes), per_class)
        return Dataset(np.arange(y.size, dtype=float)[:, None], y, tuple(range(n_classes)))

    def test_counts(self):
        for seed in range(5):
            train, test = stratified_split(self._ds(), 0.3, seed)
            assert test.class_sizes().tolist() == [3, 3]
            assert train.class_sizes().tolist() == [7, 7]

    def test_deterministic(self):
        ds = self._ds(25, 3)
        a = stratified_split(ds, 0.3, 7)
        b = stratified_split(ds, 0.3, 7)
        assert a[0] == b[0] and a[1] == b[1]

    def test_singleton_class(self):
        ds = Dataset([[0.0], [1.0], [2.0]], [0, 0, 1], (0, 1))
        with pytest.raises(DataError, match="fewer than 2"):
            stratified_split(ds, 0.5, 0)

    def test_keeps_one_on_each_side(self):
        ds = self._ds(2, 2)
        train, test = stratified_split(ds, 0.9, 0)
        assert train.class_sizes().tolist() == [1, 1]
        assert test.class_sizes().tolist() == [1, 1]

    def test_disjoint_and_complete(self):
        tr, te = split_indices(np.repeat([0, 1, 2], [5, 9, 13]), 0.25, 3)
        assert set(tr).isdisjoint(te)
        assert sorted(np.concatenate([tr, te])) == list(range(27))

    def test_split_cache_roundtrip(self, tmp_path):
        tr, te = split_indices(np.repeat([0, 1], 10), 0.3, 1)
        path = tmp_path / "split.json"
        save_split(path, tr, te, seed=1, test_fraction=0.3, dataset="x")
        tr2, te2, meta = load_split(path)
        np.testing.assert_array_equal(tr, tr2)
        np.testing.assert_array_equal(te, te2)
        assert meta == {"dataset": "x", "seed": 1, "test_fraction": 0.3}

    def test_split_cache_version(self, tmp_path):
        path = tmp_path / "split.json"
        path.write_text(json.dumps({"format": "kernelgamma-split", "version": 99}))
        with pytest.raises(DataError, match="version"):
            load_split(path)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000))
def test_sparse_roundtrip(seed):
    rng = np.random.default_rng(seed)
    n, d = rng.integers(1, 15), rng.integers(1, 6)
    X = rng.normal(size=(n, d)) * (rng.random((n, d)) < 0.5)
    labels = (-1, 2, 5)
    y = rng.integers(0, 3, n)
    present = tuple(labels[c] for c in sorted(set(y)))
    remap = {c: i for i, c in enumerate(sorted(set(y)))}
    ds = Dataset(X, [remap[c] for c in y], present)
    again = parse_sparse(to_sparse(ds))
    assert again == ds
    assert parse_sparse(to_sparse(again)) == again


def test_load_file_formats(tmp_path):
    (tmp_path / "a.csv").write_text("y,f\n1,2\n0,3\n")
    (tmp_path / "b.txt").write_text("1 1:2\n0 1:3\n")
    a = load(tmp_path / "a.csv")
    b = load(tmp_path / "b.txt")
    assert a == b
    with pytest.raises(DataError, match="not found"):
        load(tmp_path / "missing.csv")


@pytest.mark.parametrize("name,shape,labels,sizes", [
    ("diabetes", (768, 8), (0, 1), [500, 268]),
    ("breast_cancer", (683, 9), (2, 4), [444, 239]),
])
def test_builtin(name, shape, labels, sizes):
    ds = load_builtin(name)
    assert ds.X.shape == shape
    assert ds.labels == labels
    assert ds.class_sizes().tolist() == sizes


def test_builtin_unknown():
    with pytest.raises(DataError):
        load_builtin("iris")
