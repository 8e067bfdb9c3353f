import math
from itertools import combinations, product

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from kernelgamma.dataset import Dataset
from kernelgamma.geometry import (
    ClassGeometry, GeometryError, class_diameter, compute_geometry, feature_diameter_sq,
    feature_distance_sq, interclass_distance,
)

from conftest import make_dataset


def brute_diameter(points):
    pts = [tuple(map(float, p)) for p in points]
    return max((math.dist(a, b) for a, b in combinations(pts, 2)), default=0.0)


def brute_distance(a, b):
    return min(math.dist(tuple(map(float, p)), tuple(map(float, q)))
               for p, q in product(a, b))


class TestDiameter:
    def test_single_point(self):
        assert class_diameter([[0.0, 0.0]]) == 0.0

    def test_345(self):
        assert class_diameter([[0, 0], [3, 4]]) == 5.0

    def test_empty(self):
        with pytest.raises(GeometryError):
            class_diameter(np.zeros((0, 2)))

    def test_brute_force(self, rng):
        pts = rng.random((50, 3))
        assert class_diameter(pts) == pytest.approx(brute_diameter(pts), abs=1e-12)

    def test_blocked_path(self, rng, monkeypatch):
        import kernelgamma.geometry as g
        monkeypatch.setattr(g, "_BLOCK", 7)
        pts = rng.random((40, 2))
        assert class_diameter(pts) == pytest.approx(brute_diameter(pts), abs=1e-12)
        other = rng.random((23, 2)) + 1
        assert interclass_distance(pts, other) == pytest.approx(
            brute_distance(pts, other), abs=1e-12)


class TestInterclass:
    def test_enumerated(self):
        assert interclass_distance([[0, 0], [1, 0]], [[0, 3], [1, 3]]) == 3.0

    def test_shared_point(self):
        assert interclass_distance([[1, 2], [0, 0]], [[1, 2]]) == 0.0

    def test_brute_force(self, rng):
        a, b = rng.random((40, 3)), rng.random((40, 3)) + 0.5
        assert interclass_distance(a, b) == pytest.approx(brute_distance(a, b), abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(GeometryError):
            interclass_distance([[0, 0]], [[0, 0, 0]])


class TestComputeGeometry:
    def test_two_classes(self):
        ds = Dataset([[0, 0], [1, 0], [0, 4], [1, 4]], [0, 0, 1, 1], (0, 1))
        geom = compute_geometry(ds)
        assert geom.d_max == 1 and geom.d_min_interclass == 4
        assert geom.d_av == 4 and geom.t_pairs == 1

    def test_rms_of_three_pairs(self):
        geom = ClassGeometry.from_distances([1, 1, 1], [3, 4, 5])
        assert geom.d_av == pytest.approx(math.sqrt(50 / 3), abs=1e-12)
        assert geom.d_av == pytest.approx(4.08248, abs=1e-5)
        assert geom.d_min_interclass == 3 and geom.t_pairs == 3

    def test_one_class(self):
        with pytest.raises(GeometryError):
            compute_geometry(Dataset([[0.0], [1.0]], [0, 0], (0,)))

    def test_matches_brute_force(self, rng):
        ds = make_dataset(rng, 4, (12, 7, 20, 3), 5)
        geom = compute_geometry(ds)
        pts = [ds.class_points(c) for c in range(4)]
        for c in range(4):
            assert geom.diameters[c] == pytest.approx(brute_diameter(pts[c]), abs=1e-12)
        for l, k in combinations(range(4), 2):
            assert geom.pair_distances[l, k] == pytest.approx(
                brute_distance(pts[l], pts[k]), abs=1e-12)
        assert geom.pair_distances[3, 1] == 0.0

    def test_permutation_invariance(self, rng):
        ds = make_dataset(rng, 3, (10, 15, 8), 3)
        perm = rng.permutation(ds.n_samples)
        g1 = compute_geometry(ds)
        g2 = compute_geometry(ds.subset(perm))
        assert g1.to_dict() == g2.to_dict()

    def test_subsample_cap_recorded(self, rng):
        ds = make_dataset(rng, 2, (50, 30), 2)
        geom = compute_geometry(ds, max_class_size=20, seed=3)
        assert geom.subsample_cap == 20
        exact = compute_geometry(ds)
        assert geom.d_max <= exact.d_max + 1e-15
        assert geom.d_min_interclass >= exact.d_min_interclass - 1e-15

    def test_from_distances_rejects_wrong_count(self):
        with pytest.raises(GeometryError):
            ClassGeometry.from_distances([1, 1, 1], [1, 2])

    def test_negative_rejected(self):
        with pytest.raises(GeometryError):
            ClassGeometry.from_distances([1, -1], [1])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000), st.integers(2, 6))
def test_dmin_le_dav(seed, n_classes):
    rng = np.random.default_rng(seed)
    sizes = rng.integers(1, 12, n_classes)
    ds = make_dataset(rng, n_classes, sizes, int(rng.integers(1, 5)), offset=rng.uniform(0, 3))
    geom = compute_geometry(ds)
    assert geom.d_min_interclass <= geom.d_av + 1e-15
    assert np.all(np.isfinite(geom.diameters)) and np.all(geom.diameters >= 0)


class TestFeatureImage:
    def test_zero_distance(self):
        assert feature_diameter_sq(3.7, 0.0) == 0.0
        assert feature_distance_sq(0.0, 5.0) == 0.0

    def test_value(self):
        assert feature_diameter_sq(1 / 3, 1.0) == pytest.approx(2 - 2 * math.exp(-1 / 3), abs=1e-15)
        assert feature_diameter_sq(1 / 3, 1.0) == pytest.approx(0.56693, abs=1e-5)

    def test_asymptote(self):
        vals = [feature_diameter_sq(g, 1.0) for g in (1, 5, 10, 20)]
        assert all(v < 2 for v in vals)
        assert 2 - vals[-1] < 1e-8

    def test_negative_gamma(self):
        with pytest.raises(GeometryError):
            feature_diameter_sq(-1.0, 1.0)

    def test_matches_kernel_trick(self, rng):
        # |phi(x) - phi(y)|^2 = K(x,x) + K(y,y) - 2K(x,y), maximized over the class
        pts = rng.random((15, 3))
        gamma = 2.5
        sq = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1)
        feat = 2 - 2 * np.exp(-gamma * sq)
        assert feat.max() == pytest.approx(feature_diameter_sq(gamma, class_diameter(pts)), abs=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(st.floats(1e-6, 10), st.floats(1e-3, 3))
    def test_monotone_bounded(self, gamma, D):
        # past gamma*D^2 ~ 37, exp(-x) is below half an ulp of 1 and the value rounds to 2
        assume(1.5 * gamma * D * D <= 30)
        lo = feature_diameter_sq(gamma, D)
        hi = feature_diameter_sq(gamma * 1.5, D)
        assert 0 < lo < hi < 2

    def test_saturation_never_exceeds_two(self):
        vals = [feature_diameter_sq(g, 1.0) for g in np.logspace(-3, 3, 200)]
        assert np.all(np.diff(vals) >= 0)
        assert max(vals) <= 2.0
