import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from kernelgamma.kernel import (
    GramMatrix, KernelError, center, center_values, cross_vector, gram, rbf, rbf_matrix,
)


def centered_oracle(K):
    # literal triple sum over the class, O(N^3)
    N = len(K)
    M = np.zeros_like(K)
    for i in range(N):
        for j in range(N):
            s = K[i][j]
            s -= sum(K[i][l] for l in range(N)) / N
            s -= sum(K[l][j] for l in range(N)) / N
            s += sum(K[l][m] for l in range(N) for m in range(N)) / N ** 2
            M[i, j] = s
    return M


class TestRbf:
    def test_examples(self):
        assert rbf([0, 0], [0, 0], 1.0) == 1.0
        assert rbf([0, 0], [1, 1], 0.5) == pytest.approx(math.exp(-1), abs=1e-15)
        assert rbf([3.0], [1.0], 0.0) == 1.0

    def test_errors(self):
        with pytest.raises(KernelError):
            rbf([0, 0], [0], 1.0)
        with pytest.raises(KernelError):
            rbf([0], [0], -1.0)

    def test_matrix_matches_pointwise(self, rng):
        A, B = rng.normal(size=(5, 3)), rng.normal(size=(4, 3))
        R = rbf_matrix(A, B, 0.7)
        for i in range(5):
            for j in range(4):
                assert R[i, j] == pytest.approx(rbf(A[i], B[j], 0.7), rel=1e-12)


class TestGram:
    def test_example(self):
        g = gram([[0, 0], [1, 0]], 1.0)
        np.testing.assert_allclose(g.values, [[1, math.exp(-1)], [math.exp(-1), 1]], atol=1e-15)
        assert g.n == 2 and not g.centered
        assert np.asarray(g).shape == (2, 2)

    def test_single_point(self):
        assert gram([[1.0, 2.0]], 3.0).values.tolist() == [[1.0]]

    def test_read_only(self):
        g = gram([[0.0], [1.0]], 1.0)
        with pytest.raises(ValueError):
            g.values[0, 0] = 2.0

    def test_not_square(self):
        with pytest.raises(KernelError):
            GramMatrix(np.zeros((2, 3)), 1.0)

    @settings(max_examples=50, deadline=None)
    @given(arrays(np.float64, st.tuples(st.integers(1, 12), st.integers(1, 4)),
                  elements=st.floats(-10, 10)), st.floats(1e-3, 5))
    def test_structure(self, P, gamma):
        K = gram(P, gamma).values
        assert np.array_equal(K, K.T)
        assert np.all(np.diag(K) == 1.0)
        assert np.all((K >= 0) & (K <= 1))
        assert np.linalg.eigvalsh(K).min() > -1e-8

    def test_translation_invariant(self, rng):
        P = rng.normal(size=(8, 3))
        np.testing.assert_allclose(gram(P, 0.4).values, gram(P + 17.5, 0.4).values, atol=1e-12)


class TestCentering:
    def test_two_points(self):
        e = math.exp(-1)
        M = center(gram([[0.0], [1.0]], 1.0)).values
        h = (1 - e) / 2
        np.testing.assert_allclose(M, [[h, -h], [-h, h]], atol=1e-15)

    def test_triple_sum_oracle(self, rng):
        K = gram(rng.normal(size=(7, 2)), 0.8).values
        M, r, g = center_values(K)
        np.testing.assert_allclose(M, centered_oracle(K.tolist()), atol=1e-13)
        np.testing.assert_allclose(r, K.mean(axis=1), atol=1e-15)
        assert g == pytest.approx(K.mean(), abs=1e-15)

    def test_matches_projector_form(self, rng):
        K = gram(rng.normal(size=(10, 4)), 0.3).values
        N = len(K)
        H = np.eye(N) - np.full((N, N), 1 / N)
        np.testing.assert_allclose(center_values(K)[0], H @ K @ H, atol=1e-13)

    def test_properties(self, rng):
        M = center(gram(rng.normal(size=(9, 3)), 0.5)).values
        assert np.array_equal(M, M.T)
        np.testing.assert_allclose(M.sum(axis=0), 0, atol=1e-13)
        w = np.linalg.eigvalsh(M)
        assert w.min() > -1e-12
        assert w.sum() == pytest.approx(np.trace(M), abs=1e-12)

    def test_twice_rejected(self):
        with pytest.raises(KernelError, match="already"):
            center(center(gram([[0.0], [1.0]], 1.0)))


class TestCrossVector:
    def test_oracle(self, rng):
        T = rng.normal(size=(6, 2))
        x = rng.normal(size=2)
        k = cross_vector(T, x, 1.3)
        for l in range(6):
            assert k[l] == pytest.approx(math.exp(-1.3 * math.dist(T[l], x) ** 2), rel=1e-12)

    def test_training_point_hits_one(self, rng):
        T = rng.normal(size=(4, 3))
        assert cross_vector(T, T[2], 2.0)[2] == 1.0

    def test_dimension_mismatch(self):
        with pytest.raises(KernelError):
            cross_vector([[0.0, 0.0]], [1.0], 1.0)
