"""RBF kernel values, Gram matrices and their double centering."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist, pdist, squareform

__all__ = [
    "KernelError",
    "GramMatrix",
    "rbf",
    "rbf_matrix",
    "gram",
    "center",
    "center_values",
    "cross_vector",
]


class KernelError(ValueError):
    pass


def _as_2d(points) -> np.ndarray:
    P = np.asarray(points, dtype=np.float64)
    if P.ndim == 1:
        P = P[None, :]
    if P.ndim != 2:
        raise KernelError("expected a 2-D array of points")
    return P


def rbf(x, y, gamma: float) -> float:
    """``exp(-gamma * |x - y|^2)``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise KernelError(f"dimension mismatch: {x.shape} vs {y.shape}")
    if gamma < 0:
        raise KernelError("gamma must be non-negative")
    diff = x - y
    return float(np.exp(-gamma * np.dot(diff, diff)))


def rbf_matrix(A, B, gamma: float) -> np.ndarray:
    """Kernel values between every row of ``A`` and every row of ``B``."""
    A, B = _as_2d(A), _as_2d(B)
    if A.shape[1] != B.shape[1]:
        raise KernelError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    if gamma < 0:
        raise KernelError("gamma must be non-negative")
    return np.exp(-gamma * cdist(A, B, "sqeuclidean"))


def _symmetric_rbf(P: np.ndarray, gamma: float) -> np.ndarray:
    # pdist fills the upper triangle once; squareform mirrors it with a zero diagonal
    if P.shape[0] == 1:
        return np.ones((1, 1))
    return np.exp(-gamma * squareform(pdist(P, "sqeuclidean")))


@dataclass(frozen=True, eq=False)
class GramMatrix:
    values: np.ndarray
    gamma: float
    centered: bool = False

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise KernelError("Gram matrix must be square")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


def gram(points, gamma: float) -> GramMatrix:
    """RBF Gram matrix of ``points`` (exactly symmetric, unit diagonal)."""
    P = _as_2d(points)
    if P.shape[0] < 1:
        raise KernelError("need at least one point")
    if gamma < 0:
        raise KernelError("gamma must be non-negative")
    return GramMatrix(_symmetric_rbf(P, gamma), gamma, centered=False)


def center_values(K: np.ndarray):
    """Double-center ``K``; returns ``(M, row_means, grand_mean)``.

    ``M[i, j] = K[i, j] - r[i] - r[j] + g`` with ``r`` the row means and
    ``g`` the grand mean, i.e. ``H K H`` with ``H = I - 1/N``.
    """
    r = K.mean(axis=1)
    g = float(r.mean())
    # r[:, None] + r[None, :] is exactly symmetric, so M is too
    M = (K - (r[:, None] + r[None, :])) + g
    return M, r, g


def center(g: GramMatrix) -> GramMatrix:
    """POD correlation matrix of a class: the doubly centered Gram matrix."""
    if g.centered:
        raise KernelError("Gram matrix is already centered")
    M, _, _ = center_values(g.values)
    return GramMatrix(M, g.gamma, centered=True)


def cross_vector(train, x, gamma: float) -> np.ndarray:
    """Kernel values between each training point and the query ``x``."""
    T = _as_2d(train)
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != T.shape[1]:
        raise KernelError("query dimension does not match training points")
    return rbf_matrix(T, x[None, :], gamma)[:, 0]
