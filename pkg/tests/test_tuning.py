import math

import numpy as np
import pytest

from kernelgamma import tuning
from kernelgamma.dataset import DataError, Dataset
from kernelgamma.tuning import (
    GridSpec, cross_validate, default_c_grid, default_gamma_grid, evaluate_grid_naive,
    grid_search, kos_trainer, search_c, stratified_folds, svm_trainer,
)

from conftest import make_dataset, two_blobs


def test_default_grids():
    g, c = default_gamma_grid(), default_c_grid()
    assert len(g) == 10 and g[0] == 2.0 ** -15 and g[-1] == 8.0
    assert len(c) == 11 and c[0] == 2.0 ** -5 and c[-1] == 2.0 ** 15
    assert all(b / a == 4.0 for a, b in zip(g, g[1:]))


class TestFolds:
    def test_partition_and_stratification(self):
        y = np.array([0] * 23 + [1] * 12)
        folds = stratified_folds(y, 5, seed=1)
        vals = np.concatenate([va for _, va in folds])
        assert sorted(vals.tolist()) == list(range(35))
        for tr, va in folds:
            assert not set(tr) & set(va)
            assert len(tr) + len(va) == 35
            assert np.sum(y[va] == 0) in (4, 5) and np.sum(y[va] == 1) in (2, 3)

    def test_deterministic(self):
        y = np.repeat([0, 1, 2], 10)
        a = stratified_folds(y, 3, 7)
        b = stratified_folds(y, 3, 7)
        assert all(np.array_equal(p[1], q[1]) for p, q in zip(a, b))

    def test_small_class(self):
        with pytest.raises(DataError, match="fewer than 5"):
            stratified_folds(np.array([0] * 10 + [1] * 3), 5, 0)

    def test_one_fold(self):
        with pytest.raises(ValueError):
            stratified_folds(np.zeros(10), 1, 0)


class TestCrossValidate:
    def test_separable(self):
        ds = two_blobs(seed=3, n=40)
        assert cross_validate(ds, svm_trainer(1.0, 1.0)) == 1.0
        assert cross_validate(ds, kos_trainer(1.0)) == 1.0

    def test_shuffled_labels_near_chance(self):
        rng = np.random.default_rng(0)
        ds = two_blobs(seed=4, n=100)
        noise = Dataset(ds.X, rng.permutation(ds.y), ds.labels)
        assert abs(cross_validate(noise, svm_trainer(1.0, 1.0)) - 0.5) <= 0.1

    def test_no_scaling(self):
        ds = two_blobs(seed=3, n=20)
        assert cross_validate(ds, kos_trainer(0.5), k=4, scale_range=None) == 1.0


class TestGridSpec:
    def test_sorted(self):
        s = GridSpec((4, 1, 2), (10, 0.1))
        assert s.gammas == (1.0, 2.0, 4.0) and s.Cs == (0.1, 10.0)

    @pytest.mark.parametrize("kw", [dict(gammas=()), dict(Cs=(0.0,)), dict(folds=1),
                                    dict(gammas=(-1.0,))])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            GridSpec(**kw)


class TestGridSearch:
    def test_singleton(self):
        ds = two_blobs(seed=5, n=30)
        res = grid_search(ds, "svm", GridSpec((0.5,), (2.0,)))
        assert (res.gamma, res.C) == (0.5, 2.0)
        assert res.score == 1.0 and list(res.scores) == [(0.5, 2.0)]

    def test_exhaustive(self):
        ds = two_blobs(seed=5, n=20)
        spec = GridSpec((0.1, 1.0, 10.0), (0.5, 5.0))
        res = grid_search(ds, "svm", spec)
        assert set(res.scores) == {(g, c) for g in spec.gammas for c in spec.Cs}
        assert res.score == max(res.scores.values())
        kres = grid_search(ds, "kos", spec)
        assert set(kres.scores) == {(g, None) for g in spec.gammas} and kres.C is None

    def test_ties_pick_smallest(self):
        ds = two_blobs(seed=5, n=20)
        res = grid_search(ds, "svm", GridSpec((0.5, 1.0, 2.0), (1.0, 4.0)))
        assert all(s == 1.0 for s in res.scores.values())
        assert (res.gamma, res.C) == (0.5, 1.0)

    def test_grid_order_invariance(self, rng):
        ds = make_dataset(rng, 2, (30, 30), 2, offset=1.5)
        a = grid_search(ds, "svm", GridSpec((0.1, 1.0, 10.0), (0.1, 1.0, 10.0)))
        b = grid_search(ds, "svm", GridSpec((10.0, 0.1, 1.0), (10.0, 1.0, 0.1)))
        assert (a.gamma, a.C, a.score) == (b.gamma, b.C, b.score)
        assert a.scores == b.scores

    @pytest.mark.parametrize("method", ["svm", "kos"])
    def test_fast_path_matches_naive(self, rng, method):
        ds = make_dataset(rng, 3, (15, 15, 15), 2, offset=1.5)
        spec = GridSpec((0.3, 3.0), (0.5, 8.0), folds=3, seed=2)
        fast = grid_search(ds, method, spec).scores
        naive = evaluate_grid_naive(ds, method, spec)
        assert fast.keys() == naive.keys()
        for key in fast:
            assert fast[key] == pytest.approx(naive[key], abs=1e-12)

    def test_threads_match_serial(self, rng, monkeypatch):
        ds = make_dataset(rng, 2, (25, 25), 2, offset=1.5)
        spec = GridSpec((0.1, 1.0, 10.0, 100.0), (1.0, 10.0))
        serial = grid_search(ds, "svm", spec, workers=1)
        monkeypatch.setenv(tuning.THREADS_ENV, "4")
        assert tuning.thread_count() == 4
        threaded = grid_search(ds, "svm", spec)
        assert serial.scores == threaded.scores
        assert (serial.gamma, serial.C) == (threaded.gamma, threaded.C)

    def test_bad_thread_env(self, monkeypatch):
        monkeypatch.setenv(tuning.THREADS_ENV, "many")
        with pytest.raises(DataError):
            tuning.thread_count()

    def test_kos_failure_is_skipped(self):
        # at tiny gamma every kernel value rounds to 1 and no eigenpair survives
        ds = two_blobs(seed=6, n=20)
        res = grid_search(ds, "kos", GridSpec((1e-30, 1.0), (1.0,)))
        assert math.isnan(res.scores[(1e-30, None)])
        assert res.gamma == 1.0

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            grid_search(two_blobs(n=10), "knn")

    def test_search_c(self):
        ds = two_blobs(seed=5, n=20)
        res = search_c(ds, 0.7, GridSpec(Cs=(1.0, 2.0)))
        assert res.gamma == 0.7 and res.C == 1.0
        assert len(res.scores) == 2

