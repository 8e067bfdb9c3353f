"""Soft-margin RBF support vector machine trained in the dual by SMO.

Binary problems are solved with sequential minimal optimization on a
precomputed Gram matrix; multiclass problems use one-vs-one voting.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

import numpy as np

from . import _smo
from .dataset import Dataset
from .kernel import KernelError, gram, rbf_matrix

__all__ = [
    "SvmConvergenceError",
    "SvmConvergenceWarning",
    "SvmBinaryModel",
    "SvmMulticlassModel",
    "train_binary",
    "decision",
    "train_multiclass",
    "predict",
    "kkt_violations",
]

MODEL_FORMAT = "kernelgamma-svm"
MODEL_VERSION = 1

DEFAULT_TOL = 1e-3
DEFAULT_MAX_ITER = 100_000


class SvmConvergenceError(RuntimeError):
    """SMO hit its iteration cap; ``model`` holds the last iterate."""

    def __init__(self, message, model):
        super().__init__(message)
        self.model = model


class SvmConvergenceWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class SvmBinaryModel:
    """``f(x) = sum_i dual_coef[i] * K(sv_i, x) + bias``; positive side ``+1``.

    ``dual_coef`` stores ``y_i * alpha_i`` of the support vectors only.
    """

    support_vectors: np.ndarray
    dual_coef: np.ndarray
    bias: float
    gamma: float
    C: float
    support: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    n_iter: int = 0
    gap: float = 0.0
    converged: bool = True

    @property
    def alpha(self) -> np.ndarray:
        return np.abs(self.dual_coef)

    def decision(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if self.dual_coef.size == 0:
            return np.full(X.shape[0], self.bias)
        if X.shape[1] != self.support_vectors.shape[1]:
            raise KernelError("query dimension does not match the support vectors")
        return rbf_matrix(X, self.support_vectors, self.gamma) @ self.dual_coef + self.bias

    def to_dict(self) -> dict:
        return {"support_vectors": self.support_vectors.tolist(),
                "dual_coef": self.dual_coef.tolist(), "bias": self.bias,
                "gamma": self.gamma, "C": self.C, "n_iter": self.n_iter,
                "converged": self.converged}

    @classmethod
    def from_dict(cls, d: dict) -> "SvmBinaryModel":
        coef = np.array(d["dual_coef"], dtype=np.float64)
        sv = np.array(d["support_vectors"], dtype=np.float64).reshape(coef.size, -1)
        return cls(sv, coef, float(d["bias"]), float(d["gamma"]), float(d["C"]),
                   n_iter=int(d.get("n_iter", 0)), converged=bool(d.get("converged", True)))


def _solve(K: np.ndarray, y: np.ndarray, C: float, tol: float, max_iter: int,
           second_order: bool):
    alpha, G, n_iter, gap = _smo.smo(np.ascontiguousarray(K, dtype=np.float64),
                                     y.astype(np.float64), float(C), float(tol),
                                     int(max_iter), bool(second_order))
    b = _smo.bias(y.astype(np.float64), alpha, G, float(C))
    return alpha, float(b), int(n_iter), float(gap)


def _binary_from_kernel(K, X, y, gamma, C, tol, max_iter, second_order,
                        on_nonconvergence="raise") -> SvmBinaryModel:
    alpha, b, n_iter, gap = _solve(K, y, C, tol, max_iter, second_order)
    sv = np.flatnonzero(alpha > 0)
    converged = gap < tol
    model = SvmBinaryModel(X[sv], (y[sv] * alpha[sv]).astype(np.float64), b,
                           float(gamma), float(C), support=sv, n_iter=n_iter,
                           gap=gap, converged=converged)
    if not converged:
        msg = (f"SMO did not converge in {max_iter} iterations "
               f"(violation gap {gap:.3g} > tol {tol:g})")
        if on_nonconvergence == "raise":
            raise SvmConvergenceError(msg, model)
        if on_nonconvergence == "warn":
            warnings.warn(msg, SvmConvergenceWarning, stacklevel=3)
    return model


def train_binary(pos, neg, gamma: float, C: float, tol: float = DEFAULT_TOL, *,
                 max_iter: int = DEFAULT_MAX_ITER, second_order: bool = False,
                 on_nonconvergence: str = "raise") -> SvmBinaryModel:
    """Train ``pos`` (label +1) against ``neg`` (label -1).

    Working pairs are chosen by maximal KKT violation; ``second_order=True``
    picks the partner by the second-order gain instead, which usually needs
    fewer iterations. Training stops once the largest violation is below
    ``tol``.

    Raises
    ------
    SvmConvergenceError
        When ``max_iter`` is reached first and ``on_nonconvergence="raise"``.
        The partially trained model is attached to the exception.
    """
    P = np.atleast_2d(np.asarray(pos, dtype=np.float64))
    N = np.atleast_2d(np.asarray(neg, dtype=np.float64))
    if P.shape[0] == 0 or N.shape[0] == 0:
        raise ValueError("both sides need at least one sample")
    if P.shape[1] != N.shape[1]:
        raise KernelError("positive and negative samples differ in dimension")
    if not C > 0:
        raise ValueError("C must be positive")
    X = np.vstack([P, N])
    y = np.concatenate([np.ones(P.shape[0]), -np.ones(N.shape[0])])
    K = gram(X, gamma).values
    return _binary_from_kernel(K, X, y, gamma, C, tol, max_iter, second_order,
                               on_nonconvergence)


def decision(model: SvmBinaryModel, x) -> float:
    """Decision value ``f(x)`` for a single query."""
    x = np.asarray(x, dtype=np.float64)
    if model.dual_coef.size and x.shape != model.support_vectors.shape[1:]:
        raise KernelError("query dimension does not match the support vectors")
    return float(model.decision(x[None, :])[0])


def kkt_violations(model: SvmBinaryModel, X, y, alpha=None) -> np.ndarray:
    """Per-sample KKT violation of a trained binary model on its training set.

    ``alpha`` defaults to the multipliers recovered from the model. The
    violation is ``max(0, 1 - y f)`` at ``alpha = 0``, ``|y f - 1|`` for free
    multipliers and ``max(0, y f - 1)`` at ``alpha = C``.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if alpha is None:
        alpha = np.zeros(X.shape[0])
        alpha[model.support] = np.abs(model.dual_coef)
    margin = y * model.decision(X)
    v = np.where(alpha <= 0, np.maximum(0.0, 1.0 - margin),
                 np.where(alpha >= model.C, np.maximum(0.0, margin - 1.0),
                          np.abs(margin - 1.0)))
    return v


@dataclass(frozen=True, eq=False)
class SvmMulticlassModel:
    """One binary model per class pair ``(a, b)``, ``a < b``; ``a`` is positive."""

    models: dict
    n_classes: int
    gamma: float
    C: float
    labels: tuple = ()

    def votes(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        votes = np.zeros((X.shape[0], self.n_classes), dtype=np.int64)
        rows = np.arange(X.shape[0])
        for (a, b), m in self.models.items():
            f = m.decision(X)
            winner = np.where(f > 0, a, b)
            np.add.at(votes, (rows, winner), 1)
        return votes

    def predict(self, X) -> np.ndarray:
        """Majority vote; ties go to the lowest class id."""
        if self.n_classes == 1:
            X = np.atleast_2d(X)
            return np.zeros(X.shape[0], dtype=np.int64)
        return np.argmax(self.votes(X), axis=1)

    @property
    def converged(self) -> bool:
        return all(m.converged for m in self.models.values())

    def to_dict(self) -> dict:
        return {"format": MODEL_FORMAT, "version": MODEL_VERSION,
                "n_classes": self.n_classes, "gamma": self.gamma, "C": self.C,
                "labels": list(self.labels),
                "models": [{"pair": [a, b], **m.to_dict()}
                           for (a, b), m in sorted(self.models.items())]}

    @classmethod
    def from_dict(cls, d: dict) -> "SvmMulticlassModel":
        if d.get("format") != MODEL_FORMAT or d.get("version") != MODEL_VERSION:
            raise ValueError("not an SVM model file of a supported version")
        models = {tuple(m["pair"]): SvmBinaryModel.from_dict(m) for m in d["models"]}
        return cls(models, int(d["n_classes"]), float(d["gamma"]), float(d["C"]),
                   tuple(d["labels"]))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "SvmMulticlassModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def train_from_kernel(K: np.ndarray, X: np.ndarray, y: np.ndarray, n_classes: int,
                      gamma: float, C: float, tol: float = DEFAULT_TOL, *,
                      max_iter: int = DEFAULT_MAX_ITER, second_order: bool = False,
                      on_nonconvergence: str = "raise", labels: tuple = ()
                      ) -> SvmMulticlassModel:
    """One-vs-one training on a precomputed Gram matrix ``K`` of ``X``.

    Lets callers reuse one Gram matrix across several values of ``C``.
    """
    index = [np.flatnonzero(y == c) for c in range(n_classes)]
    models = {}
    for a, b in combinations(range(n_classes), 2):
        idx = np.concatenate([index[a], index[b]])
        if index[a].size == 0 or index[b].size == 0:
            raise ValueError(f"class {a if index[a].size == 0 else b} has no samples")
        yy = np.concatenate([np.ones(index[a].size), -np.ones(index[b].size)])
        Kp = K[np.ix_(idx, idx)]
        models[(a, b)] = _binary_from_kernel(Kp, X[idx], yy, gamma, C, tol, max_iter,
                                             second_order, on_nonconvergence)
    return SvmMulticlassModel(models, n_classes, float(gamma), float(C), labels)


def train_multiclass(ds: Dataset, gamma: float, C: float, tol: float = DEFAULT_TOL, *,
                     max_iter: int = DEFAULT_MAX_ITER, second_order: bool = False,
                     on_nonconvergence: str = "raise") -> SvmMulticlassModel:
    """One-vs-one SVM over all classes of ``ds``."""
    if ds.n_classes < 2:
        raise ValueError("need at least two classes")
    if not C > 0:
        raise ValueError("C must be positive")
    K = gram(ds.X, gamma).values
    return train_from_kernel(K, ds.X, ds.y, ds.n_classes, gamma, C, tol,
                             max_iter=max_iter, second_order=second_order,
                             on_nonconvergence=on_nonconvergence, labels=ds.labels)


def predict(model: SvmMulticlassModel, x) -> int:
    return int(model.predict(np.asarray(x, dtype=np.float64)[None, :])[0])
