"""Cross-validated grid search, the baseline that the analytical rule replaces.

Folds are stratified and min-max scaling is refitted on the training part of
every fold, so no validation statistics leak into the fitted model.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import kos, svm
from .dataset import DataError, Dataset, fit_scaling
from .kernel import gram

__all__ = [
    "GridSpec",
    "GridResult",
    "default_gamma_grid",
    "default_c_grid",
    "stratified_folds",
    "cross_validate",
    "svm_trainer",
    "kos_trainer",
    "grid_search",
    "search_c",
    "evaluate_grid_naive",
    "thread_count",
]

THREADS_ENV = "KERNELGAMMA_THREADS"


def default_gamma_grid() -> list:
    """``2^-15, 2^-13, ..., 2^3`` (10 values)."""
    return [2.0 ** e for e in range(-15, 4, 2)]


def default_c_grid() -> list:
    """``2^-5, 2^-3, ..., 2^15`` (11 values)."""
    return [2.0 ** e for e in range(-5, 16, 2)]


def thread_count(default: int = 1) -> int:
    """Worker count from the ``KERNELGAMMA_THREADS`` environment variable."""
    raw = os.environ.get(THREADS_ENV)
    if not raw:
        return default
    try:
        return max(1, int(raw))
    except ValueError:
        raise DataError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None


@dataclass(frozen=True)
class GridSpec:
    gammas: tuple = field(default_factory=lambda: tuple(default_gamma_grid()))
    Cs: tuple = field(default_factory=lambda: tuple(default_c_grid()))
    folds: int = 5
    seed: int = 0
    scale_range: tuple | None = (0.0, 1.0)

    def __post_init__(self):
        gammas = tuple(sorted(float(g) for g in self.gammas))
        Cs = tuple(sorted(float(c) for c in self.Cs))
        if not gammas or not Cs:
            raise ValueError("grids must be non-empty")
        if min(gammas) <= 0 or min(Cs) <= 0:
            raise ValueError("grid values must be positive")
        if self.folds < 2:
            raise ValueError("need at least 2 folds")
        object.__setattr__(self, "gammas", gammas)
        object.__setattr__(self, "Cs", Cs)

    def to_dict(self) -> dict:
        return {"gammas": list(self.gammas), "Cs": list(self.Cs), "folds": self.folds,
                "seed": self.seed,
                "scale_range": list(self.scale_range) if self.scale_range else None}


@dataclass(frozen=True)
class GridResult:
    method: str
    gamma: float
    C: float | None
    score: float
    elapsed: float
    scores: dict  # (gamma, C or None) -> mean CV accuracy

    def to_dict(self) -> dict:
        return {"method": self.method, "gamma": self.gamma, "C": self.C,
                "cv_score": self.score, "elapsed": self.elapsed,
                "scores": [{"gamma": g, "C": c, "cv_score": s}
                           for (g, c), s in sorted(self.scores.items(),
                                                   key=lambda kv: (kv[0][0], kv[0][1] or 0))]}


def stratified_folds(y, k: int, seed: int) -> list:
    """``k`` stratified (train_idx, val_idx) pairs.

    Each class is shuffled with the seeded generator and dealt round-robin
    into the folds.
    """
    y = np.asarray(y)
    if k < 2:
        raise ValueError("need at least 2 folds")
    rng = np.random.default_rng(seed)
    fold_of = np.empty(y.size, dtype=np.int64)
    for c in np.unique(y):
        idx = np.flatnonzero(y == c)
        if idx.size < k:
            raise DataError(f"class {c} has {idx.size} samples, fewer than {k} folds")
        perm = rng.permutation(idx)
        fold_of[perm] = np.arange(idx.size) % k
    return [(np.flatnonzero(fold_of != f), np.flatnonzero(fold_of == f)) for f in range(k)]


def _fold_data(ds: Dataset, k: int, seed: int, scale_range):
    out = []
    for tr, va in stratified_folds(ds.y, k, seed):
        train, val = ds.subset(tr), ds.subset(va)
        if scale_range is not None:
            spec = fit_scaling(train, scale_range)
            train = train.with_features(spec.transform(train.X))
            val = val.with_features(spec.transform(val.X))
        out.append((train, val))
    return out


def cross_validate(ds: Dataset, trainer: Callable[[Dataset], object], k: int = 5,
                   seed: int = 0, scale_range=(0.0, 1.0)) -> float:
    """Mean validation accuracy of ``trainer`` over ``k`` stratified folds.

    ``trainer`` maps a training :class:`Dataset` to an object with a
    ``predict(X)`` method returning class ids.
    """
    scores = []
    for train, val in _fold_data(ds, k, seed, scale_range):
        model = trainer(train)
        scores.append(float(np.mean(model.predict(val.X) == val.y)))
    return float(np.mean(scores))


def svm_trainer(gamma: float, C: float, **options) -> Callable[[Dataset], object]:
    options.setdefault("on_nonconvergence", "warn")
    return lambda train: svm.train_multiclass(train, gamma, C, **options)


def kos_trainer(gamma: float, **options) -> Callable[[Dataset], object]:
    return lambda train: kos.fit(train, gamma, **options)


def _svm_scores_for_gamma(folds, gamma, Cs, svm_options):
    per_c = np.zeros((len(folds), len(Cs)))
    for f, (train, val) in enumerate(folds):
        K = gram(train.X, gamma).values
        for j, C in enumerate(Cs):
            # the last iterate of an unconverged fold model still gets scored
            model = svm.train_from_kernel(K, train.X, train.y, train.n_classes,
                                          gamma, C, on_nonconvergence="ignore",
                                          **svm_options)
            per_c[f, j] = np.mean(model.predict(val.X) == val.y)
    return per_c.mean(axis=0)


def _kos_score_for_gamma(folds, gamma, kos_options):
    scores = []
    for train, val in folds:
        try:
            model = kos.fit(train, gamma, **kos_options)
        except kos.KosError:
            return math.nan
        scores.append(np.mean(model.predict(val.X) == val.y))
    return float(np.mean(scores))


def grid_search(ds: Dataset, method: str, spec: GridSpec | None = None, *,
                workers: int | None = None, svm_options: dict | None = None,
                kos_options: dict | None = None) -> GridResult:
    """Exhaustive cross-validated search over ``spec``.

    SVM searches ``gamma x C``; KOS has no penalty and searches ``gamma``
    only. The best mean CV accuracy wins; ties go to the smaller gamma and
    then the smaller C, so the result does not depend on grid order. Grid
    points are evaluated by ``workers`` threads (default from
    ``KERNELGAMMA_THREADS``, else 1) and merged deterministically.
    """
    spec = spec or GridSpec()
    method = method.lower()
    if method not in ("svm", "kos"):
        raise ValueError(f"unknown method {method!r}")
    workers = workers or thread_count()
    svm_options = dict(svm_options or {})
    svm_options.pop("on_nonconvergence", None)
    kos_options = dict(kos_options or {})
    start = time.perf_counter()
    folds = _fold_data(ds, spec.folds, spec.seed, spec.scale_range)
    if method == "svm":
        def job(g):
            return _svm_scores_for_gamma(folds, g, spec.Cs, svm_options)
    else:
        def job(g):
            return _kos_score_for_gamma(folds, g, kos_options)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(job, spec.gammas))
    else:
        results = [job(g) for g in spec.gammas]
    scores = {}
    for g, res in zip(spec.gammas, results):
        if method == "svm":
            for C, s in zip(spec.Cs, res):
                scores[(g, C)] = float(s)
        else:
            scores[(g, None)] = float(res)
    best_key, best = None, -math.inf
    for key in sorted(scores, key=lambda kv: (kv[0], kv[1] or 0.0)):
        s = scores[key]
        if not math.isnan(s) and s > best:
            best_key, best = key, s
    if best_key is None:
        raise kos.KosError("no grid point produced a usable model")
    elapsed = time.perf_counter() - start
    return GridResult(method, best_key[0], best_key[1], best, elapsed, scores)


def search_c(ds: Dataset, gamma: float, spec: GridSpec | None = None, **kwargs) -> GridResult:
    """Tune only the SVM penalty for a fixed ``gamma``."""
    spec = spec or GridSpec()
    fixed = GridSpec((gamma,), spec.Cs, spec.folds, spec.seed, spec.scale_range)
    return grid_search(ds, "svm", fixed, **kwargs)


def evaluate_grid_naive(ds: Dataset, method: str, spec: GridSpec,
                        gammas: Sequence[float] | None = None) -> dict:
    """Reference scores via :func:`cross_validate` (slow; used for checking)."""
    out = {}
    for g in gammas or spec.gammas:
        if method == "svm":
            for C in spec.Cs:
                out[(g, C)] = cross_validate(ds, svm_trainer(g, C), spec.folds,
                                             spec.seed, spec.scale_range)
        else:
            out[(g, None)] = cross_validate(ds, kos_trainer(g), spec.folds,
                                            spec.seed, spec.scale_range)
    return out
