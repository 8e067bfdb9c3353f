"""Class diameters and inter-class distances in attribute space.

All distances are exact: pairwise squared Euclidean distances are evaluated
block by block with :func:`scipy.spatial.distance.cdist` (which sums
``(x_i - y_i)**2`` directly, avoiding the cancellation of the
``|x|^2 + |y|^2 - 2 x.y`` expansion) and square-rooted once at the end.

Under the RBF kernel ``K(x, y) = exp(-gamma |x - y|^2)`` the squared
feature-space distance between two mapped points is ``2 - 2 exp(-gamma r^2)``,
a monotone function of ``r``. Feature-space diameters and class distances are
therefore images of their attribute-space counterparts, see
:func:`feature_diameter_sq`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.spatial.distance import cdist

from .dataset import Dataset

__all__ = [
    "GeometryError",
    "ClassGeometry",
    "class_diameter",
    "interclass_distance",
    "compute_geometry",
    "feature_diameter_sq",
    "feature_distance_sq",
]

_BLOCK = 2048


class GeometryError(ValueError):
    pass


def _points(points) -> np.ndarray:
    P = np.asarray(points, dtype=np.float64)
    if P.ndim == 1:
        P = P[:, None] if P.size else P.reshape(0, 1)
    if P.ndim != 2:
        raise GeometryError("points must form a 2-D array")
    if P.shape[0] == 0:
        raise GeometryError("empty point set")
    return P


def _max_sq(A: np.ndarray) -> float:
    best = 0.0
    n = A.shape[0]
    for start in range(0, n, _BLOCK):
        block = A[start:start + _BLOCK]
        # rows before `start` were already compared against this block
        sq = cdist(block, A[start:], "sqeuclidean")
        best = max(best, float(sq.max()))
    return best


def _min_sq(A: np.ndarray, B: np.ndarray) -> float:
    best = math.inf
    for start in range(0, A.shape[0], _BLOCK):
        sq = cdist(A[start:start + _BLOCK], B, "sqeuclidean")
        best = min(best, float(sq.min()))
    return best


def class_diameter(points) -> float:
    """Largest pairwise Euclidean distance within ``points`` (0 for one point)."""
    P = _points(points)
    return math.sqrt(_max_sq(P))


def interclass_distance(a, b) -> float:
    """Smallest Euclidean distance between a point of ``a`` and one of ``b``."""
    A, B = _points(a), _points(b)
    if A.shape[1] != B.shape[1]:
        raise GeometryError("point sets have different dimensions")
    return math.sqrt(_min_sq(A, B))


@dataclass(frozen=True)
class ClassGeometry:
    """Diameters, pairwise class distances and their aggregates.

    ``pair_distances[l, k]`` holds the distance between classes ``l < k``;
    the lower triangle and diagonal are zero.
    """

    diameters: np.ndarray
    pair_distances: np.ndarray
    d_max: float = field(init=False)
    d_min_interclass: float = field(init=False)
    d_av: float = field(init=False)
    t_pairs: int = field(init=False)
    subsample_cap: int | None = None

    def __post_init__(self):
        D = np.array(self.diameters, dtype=np.float64)
        d = np.array(self.pair_distances, dtype=np.float64)
        P = D.size
        if P < 2:
            raise GeometryError("at least two classes are needed for inter-class distances")
        if d.shape != (P, P):
            raise GeometryError("pair distance matrix must be P x P")
        if not (np.all(np.isfinite(D)) and np.all(np.isfinite(d))):
            raise GeometryError("non-finite distances")
        if np.any(D < 0) or np.any(d < 0):
            raise GeometryError("negative distances")
        d = np.triu(d, k=1)
        D.flags.writeable = False
        d.flags.writeable = False
        pairs = [float(d[l, k]) for l, k in combinations(range(P), 2)]
        object.__setattr__(self, "diameters", D)
        object.__setattr__(self, "pair_distances", d)
        object.__setattr__(self, "d_max", float(D.max()))
        object.__setattr__(self, "d_min_interclass", min(pairs))
        # fixed (l, k) order and exact summation keep d_av reproducible
        mean_sq = math.fsum(p * p for p in pairs) / len(pairs)
        object.__setattr__(self, "d_av", math.sqrt(mean_sq))
        object.__setattr__(self, "t_pairs", len(pairs))

    @classmethod
    def from_distances(cls, diameters, pair_distances) -> "ClassGeometry":
        """Build from per-class diameters and the distances of each class pair.

        ``pair_distances`` is either a full ``P x P`` matrix (upper triangle
        used) or a flat sequence in ``(0,1), (0,2), ..., (P-2,P-1)`` order.
        """
        D = np.asarray(diameters, dtype=np.float64)
        d = np.asarray(pair_distances, dtype=np.float64)
        if d.ndim == 1:
            P = D.size
            if d.size != P * (P - 1) // 2:
                raise GeometryError("need one distance per class pair")
            full = np.zeros((P, P))
            full[np.triu_indices(P, k=1)] = d
            d = full
        return cls(D, d)

    @property
    def n_classes(self) -> int:
        return self.diameters.size

    def pair_list(self) -> list:
        P = self.n_classes
        return [float(self.pair_distances[l, k]) for l, k in combinations(range(P), 2)]

    def to_dict(self) -> dict:
        return {
            "diameters": self.diameters.tolist(),
            "pair_distances": self.pair_distances.tolist(),
            "D_max": self.d_max,
            "d_min": self.d_min_interclass,
            "d_av": self.d_av,
            "T": self.t_pairs,
            "subsample_cap": self.subsample_cap,
        }


def compute_geometry(ds: Dataset, *, max_class_size: int | None = None,
                     seed: int = 0) -> ClassGeometry:
    """Class geometry of ``ds`` over its original classes.

    Parameters
    ----------
    max_class_size : int, optional
        When given, classes larger than this are replaced by a uniform random
        subsample of that size before measuring. Off by default; the cap is
        recorded on the result.
    seed : int
        Seed for the subsampling.
    """
    P = ds.n_classes
    if P < 2:
        raise GeometryError("at least two classes are needed for inter-class distances")
    rng = np.random.default_rng(seed)
    groups = []
    for c in range(P):
        pts = ds.class_points(c)
        if pts.shape[0] == 0:
            raise GeometryError(f"class {c} is empty")
        if max_class_size is not None and pts.shape[0] > max_class_size:
            pts = pts[np.sort(rng.choice(pts.shape[0], max_class_size, replace=False))]
        groups.append(pts)
    diameters = np.array([math.sqrt(_max_sq(g)) for g in groups])
    pair = np.zeros((P, P))
    for l, k in combinations(range(P), 2):
        pair[l, k] = math.sqrt(_min_sq(groups[l], groups[k]))
    geom = ClassGeometry(diameters, pair, subsample_cap=max_class_size)
    return geom


def _check_gamma(gamma: float, r: float) -> None:
    if gamma < 0:
        raise GeometryError("gamma must be non-negative")
    if r < 0:
        raise GeometryError("distance must be non-negative")


def feature_diameter_sq(gamma: float, D: float) -> float:
    """Squared feature-space diameter ``2 - 2 exp(-gamma D^2)`` of a class."""
    _check_gamma(gamma, D)
    return -2.0 * math.expm1(-gamma * D * D)


def feature_distance_sq(gamma: float, d: float) -> float:
    """Squared feature-space distance ``2 - 2 exp(-gamma d^2)`` between classes."""
    _check_gamma(gamma, d)
    return -2.0 * math.expm1(-gamma * d * d)
