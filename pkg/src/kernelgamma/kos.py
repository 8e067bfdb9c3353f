"""Kernel optimization subspaces (KOS) classifier.

Each class (or, for large classes, each chunk of a class) is summarized by
the POD basis of its mapped training points: the eigenpairs of the doubly
centered class Gram matrix. A query is projected onto every class subspace
and assigned to the class whose subspace is nearest in feature space.

For a class with training points ``X_1..X_N``, Gram matrix ``K`` with row
means ``r`` and grand mean ``g``, and retained eigenpairs ``(s_i, V^i)`` of
the centered matrix, the coordinates of a query ``x`` are::

    alpha_i = (V^i . (k - r) - (mean(k) - g) * sum(V^i)) / sqrt(s_i)

where ``k_l = K(X_l, x)``. These are the coordinates of the centered image
``phi(x) - mean_l phi(X_l)`` in the orthonormal POD basis.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import linalg

from .dataset import Dataset
from .kernel import center_values, gram, rbf_matrix

__all__ = [
    "KosError",
    "ClassSubspace",
    "KosModel",
    "split_imbalanced",
    "fit",
    "coordinates",
    "distance",
    "predict",
]

MODEL_FORMAT = "kernelgamma-kos"
MODEL_VERSION = 1

#: ``"centered"`` measures |phi(x) - mean|^2 - sum(alpha^2), the squared
#: distance from the query image to the affine class subspace.
#: ``"kernel"`` uses K(x, x) - sum(alpha^2) instead, ignoring the class mean.
NORMS = ("centered", "kernel")


class KosError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class ClassSubspace:
    """Retained POD eigenpairs of one class or subclass.

    ``eigvecs[:, i]`` is the unit eigenvector paired with ``eigvals[i]``;
    eigenvalues are strictly positive and sorted in descending order.
    """

    train_points: np.ndarray
    eigvals: np.ndarray
    eigvecs: np.ndarray
    row_means: np.ndarray
    grand_mean: float
    class_id: int
    subclass_id: int = 0
    n_discarded: int = 0
    discarded_sum: float = 0.0

    @property
    def n_points(self) -> int:
        return self.train_points.shape[0]

    @property
    def rank(self) -> int:
        return self.eigvals.size

    def to_dict(self) -> dict:
        return {
            "class_id": self.class_id,
            "subclass_id": self.subclass_id,
            "train_points": self.train_points.tolist(),
            "eigvals": self.eigvals.tolist(),
            "eigvecs": self.eigvecs.tolist(),
            "row_means": self.row_means.tolist(),
            "grand_mean": self.grand_mean,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ClassSubspace":
        V = np.array(d["eigvecs"], dtype=np.float64)
        w = np.array(d["eigvals"], dtype=np.float64)
        return cls(np.array(d["train_points"], dtype=np.float64), w,
                   V.reshape(-1, w.size), np.array(d["row_means"]),
                   float(d["grand_mean"]), int(d["class_id"]), int(d["subclass_id"]))


@dataclass(frozen=True, eq=False)
class KosModel:
    subspaces: tuple
    gamma: float
    n_classes: int
    labels: tuple = ()
    tol: float = 1e-10
    norm: str = "centered"
    subclass_map: dict = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "subspaces", tuple(self.subspaces))
        mapping = {i: s.class_id for i, s in enumerate(self.subspaces)}
        missing = set(range(self.n_classes)) - set(mapping.values())
        if missing:
            raise KosError(f"classes without a subspace: {sorted(missing)}")
        if self.norm not in NORMS:
            raise KosError(f"unknown norm {self.norm!r}")
        object.__setattr__(self, "subclass_map", mapping)

    def distances(self, X) -> np.ndarray:
        """Distances of each query row to each subspace, shape (n, n_subspaces)."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return np.column_stack([_distances(s, X, self.gamma, self.norm)
                                for s in self.subspaces])

    def predict(self, X) -> np.ndarray:
        """Class ids of the query rows (nearest subspace, lowest id on ties)."""
        D = self.distances(X)
        ids = np.array([s.class_id for s in self.subspaces])
        return ids[np.argmin(D, axis=1)]

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "gamma": self.gamma,
            "n_classes": self.n_classes,
            "labels": list(self.labels),
            "tol": self.tol,
            "norm": self.norm,
            "subspaces": [s.to_dict() for s in self.subspaces],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "KosModel":
        if d.get("format") != MODEL_FORMAT or d.get("version") != MODEL_VERSION:
            raise KosError("not a KOS model file of a supported version")
        return cls([ClassSubspace.from_dict(s) for s in d["subspaces"]],
                   float(d["gamma"]), int(d["n_classes"]), tuple(d["labels"]),
                   float(d["tol"]), d["norm"])

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "KosModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def split_imbalanced(ds: Dataset, factor: float = 2.0, *, shuffle: bool = True,
                     seed: int = 0) -> list:
    """Partition classes that are much larger than the smallest one.

    A class of size ``n`` with ``n > factor * m`` (``m`` the smallest class
    size) is cut into ``ceil(n / (factor * m))`` contiguous chunks of nearly
    equal size, after an optional seeded shuffle. ``factor=math.inf``
    disables splitting.

    Returns
    -------
    list of (class_id, list of ndarray)
        Point arrays of the chunks of every class, in class order.
    """
    if not factor >= 1:
        raise KosError("imbalance factor must be >= 1")
    sizes = ds.class_sizes()
    m = int(sizes.min())
    rng = np.random.default_rng(seed)
    out = []
    for c in range(ds.n_classes):
        pts = ds.class_points(c)
        n = pts.shape[0]
        if math.isinf(factor) or n <= factor * m:
            out.append((c, [pts]))
            continue
        n_chunks = math.ceil(n / (factor * m))
        order = rng.permutation(n) if shuffle else np.arange(n)
        out.append((c, [pts[idx] for idx in np.array_split(order, n_chunks)]))
    return out


def _subspace(points: np.ndarray, gamma: float, tol: float, class_id: int,
              subclass_id: int) -> ClassSubspace:
    K = gram(points, gamma).values
    M, r, g = center_values(K)
    try:
        w, V = linalg.eigh(M)
    except linalg.LinAlgError as exc:
        raise KosError(f"eigensolver failed for class {class_id}: {exc}") from exc
    w, V = w[::-1], V[:, ::-1]
    top = w[0] if w.size else 0.0
    keep = w > tol * top if top > 0 else np.zeros(w.size, dtype=bool)
    if not keep.any():
        raise KosError(
            f"class {class_id} (subclass {subclass_id}) has no retained eigenpair; "
            "it needs at least two distinct points")
    wk = w[keep]
    Vk = np.ascontiguousarray(V[:, keep])
    for a in (points, wk, Vk, r):
        a.flags.writeable = False
    return ClassSubspace(points, wk, Vk, r, g, class_id, subclass_id,
                         n_discarded=int((~keep).sum()),
                         discarded_sum=float(w[~keep].sum()))


def fit(ds: Dataset, gamma: float, tol: float = 1e-10, *,
        imbalance_factor: float = 2.0, shuffle: bool = True, seed: int = 0,
        norm: str = "centered") -> KosModel:
    """Fit one POD feature subspace per class (or per chunk of a large class).

    Eigenpairs with eigenvalue ``<= tol * largest`` are discarded.
    """
    if not gamma > 0:
        raise KosError("gamma must be positive")
    if np.any(ds.class_sizes() == 0):
        raise KosError("every class needs at least one training point")
    subspaces = []
    for c, chunks in split_imbalanced(ds, imbalance_factor, shuffle=shuffle, seed=seed):
        for j, pts in enumerate(chunks):
            subspaces.append(_subspace(np.array(pts), gamma, tol, c, j))
    return KosModel(subspaces, gamma, ds.n_classes, ds.labels, tol, norm)


def _coordinates(sub: ClassSubspace, X: np.ndarray, gamma: float):
    if X.shape[1] != sub.train_points.shape[1]:
        raise KosError("query dimension does not match the training points")
    k = rbf_matrix(X, sub.train_points, gamma)        # (n, N)
    kbar = k.mean(axis=1)
    proj = (k - sub.row_means) @ sub.eigvecs          # sum_l V_l k_l - sum_l V_l r_l
    proj -= np.outer(kbar - sub.grand_mean, sub.eigvecs.sum(axis=0))
    return proj / np.sqrt(sub.eigvals), kbar


def coordinates(sub: ClassSubspace, x, gamma: float) -> np.ndarray:
    """Coordinates of the query ``x`` in the POD basis of ``sub``."""
    x = np.asarray(x, dtype=np.float64)
    alpha, _ = _coordinates(sub, x[None, :], gamma)
    return alpha[0]


def _distances(sub: ClassSubspace, X: np.ndarray, gamma: float, norm: str) -> np.ndarray:
    alpha, kbar = _coordinates(sub, X, gamma)
    # K(x, x) = 1 for the RBF kernel
    if norm == "centered":
        sq_norm = 1.0 - 2.0 * kbar + sub.grand_mean
    else:
        sq_norm = np.ones(X.shape[0])
    return np.sqrt(np.maximum(sq_norm - np.einsum("ij,ij->i", alpha, alpha), 0.0))


def distance(sub: ClassSubspace, x, gamma: float, norm: str = "centered") -> float:
    """Feature-space distance from the image of ``x`` to the class subspace.

    The radicand is clamped at zero before taking the square root.
    """
    if norm not in NORMS:
        raise KosError(f"unknown norm {norm!r}")
    x = np.asarray(x, dtype=np.float64)
    return float(_distances(sub, x[None, :], gamma, norm)[0])


def predict(model: KosModel, x) -> int:
    """Class id of the single query ``x``."""
    return int(model.predict(np.asarray(x, dtype=np.float64)[None, :])[0])
