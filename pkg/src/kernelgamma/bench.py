"""Benchmark harness comparing grid-search tuning with the analytical gamma.

For every dataset and seed the data are split (stratified), min-max scaled
on the training part, and each classifier is run in two modes:

``learning``
    cross-validated grid search over gamma (and C for SVM), then training
    with the winning parameters;
``dmm``
    gamma from :func:`kernelgamma.dmm.estimate` on the scaled training set;
    for SVM only C is cross-validated.

Tuning, training and prediction are timed separately with a monotonic
clock. Precision is macro-averaged over classes.
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import dmm, kos, svm
from .dataset import (BUILTIN_DATASETS, DataError, Dataset, apply_scaling, fit_scaling,
                      load, load_builtin, stratified_split)
from .geometry import compute_geometry
from .tuning import GridSpec, grid_search, search_c

__all__ = [
    "accuracy",
    "macro_precision",
    "confusion_matrix",
    "EvalReport",
    "DatasetConfig",
    "BenchConfig",
    "run_benchmark",
    "emit_report",
    "CSV_FIELDS",
]

REPORT_FORMAT = "kernelgamma-report"
REPORT_VERSION = 1
METHODS = ("svm", "kos")
MODES = ("learning", "dmm")
TIME_FIELDS = ("tune_time", "train_time", "predict_time")

#: Column order of CSV reports.
CSV_FIELDS = (
    "dataset", "n_classes", "method", "mode", "seed", "gamma", "C",
    "accuracy", "precision", "cv_score", "tune_time", "train_time",
    "predict_time", "n_train", "n_test",
)


def _check_pair(pred, truth):
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise ValueError("prediction and truth lengths differ")
    if pred.size == 0:
        raise ValueError("empty label vectors")
    return pred, truth


def accuracy(pred, truth) -> float:
    pred, truth = _check_pair(pred, truth)
    return float(np.mean(pred == truth))


def confusion_matrix(pred, truth, n_classes: int) -> np.ndarray:
    """``C[t, p]`` counts samples of true class ``t`` predicted as ``p``."""
    pred, truth = _check_pair(pred, truth)
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (truth.astype(np.int64), pred.astype(np.int64)), 1)
    return cm


def macro_precision(pred, truth, n_classes: int) -> float:
    """Unweighted mean of per-class precision ``TP / (TP + FP)``.

    Classes that are never predicted contribute a precision of 0.
    """
    cm = confusion_matrix(pred, truth, n_classes)
    predicted = cm.sum(axis=0)
    tp = np.diag(cm)
    per_class = np.divide(tp, predicted, out=np.zeros(n_classes), where=predicted > 0)
    return float(per_class.mean())


@dataclass
class EvalReport:
    dataset: str
    n_classes: int
    method: str
    mode: str
    seed: int
    gamma: float
    C: float | None
    accuracy: float
    precision: float
    tune_time: float
    train_time: float
    predict_time: float
    cv_score: float | None = None
    n_train: int = 0
    n_test: int = 0
    config: dict = field(default_factory=dict)

    def to_dict(self, times: bool = True) -> dict:
        d = asdict(self)
        if not times:
            for k in TIME_FIELDS:
                d.pop(k)
        return d


@dataclass
class DatasetConfig:
    """Where a benchmark dataset comes from.

    Exactly one of ``path``, ``builtin`` or ``data`` is used. An explicit
    ``test_path`` replaces the seeded split with a fixed train/test pair.
    """

    name: str
    path: str | None = None
    builtin: str | None = None
    data: Dataset | None = None
    fmt: str | None = None
    label_column: int = 0
    test_fraction: float = 0.3
    test_path: str | None = None

    def load(self) -> Dataset:
        if self.data is not None:
            return self.data
        if self.builtin is not None:
            return load_builtin(self.builtin)
        if self.path is None:
            raise DataError(f"dataset {self.name!r} has no source")
        return load(self.path, self.fmt, self.label_column)

    @classmethod
    def from_spec(cls, spec: str, test_fraction: float | None = None, **kw) -> "DatasetConfig":
        """``builtin:<name>`` or a file path."""
        if spec.startswith("builtin:"):
            name = spec.split(":", 1)[1]
            if name not in BUILTIN_DATASETS:
                raise DataError(f"unknown builtin dataset {name!r}")
            frac = test_fraction if test_fraction is not None else BUILTIN_DATASETS[name][1]
            return cls(name=name, builtin=name, test_fraction=frac, **kw)
        frac = test_fraction if test_fraction is not None else 0.3
        return cls(name=Path(spec).stem, path=spec, test_fraction=frac, **kw)


@dataclass
class BenchConfig:
    datasets: Sequence[DatasetConfig]
    methods: Sequence[str] = METHODS
    modes: Sequence[str] = MODES
    seeds: Sequence[int] = (0,)
    grid: GridSpec = field(default_factory=GridSpec)
    scale_range: tuple | None = (0.0, 1.0)
    variant: str = "avg"
    imbalance_factor: float = 2.0
    kos_tol: float = 1e-10
    svm_tol: float = svm.DEFAULT_TOL
    fixed_C: float | None = None
    workers: int | None = None

    def echo(self) -> dict:
        return {
            "scale_range": list(self.scale_range) if self.scale_range else None,
            "variant": self.variant,
            "imbalance_factor": self.imbalance_factor,
            "kos_tol": self.kos_tol,
            "svm_tol": self.svm_tol,
            "grid": self.grid.to_dict(),
            "fixed_C": self.fixed_C,
            "precision_average": "macro",
        }


def _prepare(ds_cfg: DatasetConfig, seed: int, cfg: BenchConfig):
    ds = ds_cfg.load()
    if ds_cfg.test_path is not None:
        train = ds
        test = load(ds_cfg.test_path, ds_cfg.fmt, ds_cfg.label_column)
        if test.labels != train.labels:
            raise DataError(f"{ds_cfg.test_path}: label set differs from training file")
    else:
        train, test = stratified_split(ds, ds_cfg.test_fraction, seed)
    if cfg.scale_range is not None:
        spec = fit_scaling(train, cfg.scale_range)
        scaled_train, scaled_test = apply_scaling(train, spec), apply_scaling(test, spec)
    else:
        scaled_train, scaled_test = train, test
    return train, scaled_train, scaled_test


def _run_one(method, mode, train, strain, stest, seed, cfg: BenchConfig):
    grid = GridSpec(cfg.grid.gammas, cfg.grid.Cs, cfg.grid.folds, seed, cfg.scale_range)
    kos_options = {"tol": cfg.kos_tol, "imbalance_factor": cfg.imbalance_factor, "seed": seed}
    svm_options = {"tol": cfg.svm_tol}
    cv_score = None
    t0 = time.perf_counter()
    if mode == "learning":
        res = grid_search(train, method, grid, workers=cfg.workers,
                          svm_options=svm_options, kos_options=kos_options)
        gamma, C, cv_score = res.gamma, res.C, res.score
    else:
        gamma = dmm.estimate(compute_geometry(strain), cfg.variant).gamma
        C = None
        if method == "svm":
            if cfg.fixed_C is not None:
                C = cfg.fixed_C
            else:
                res = search_c(train, gamma, grid, workers=cfg.workers,
                               svm_options=svm_options)
                C, cv_score = res.C, res.score
    tune_time = time.perf_counter() - t0

    t0 = time.perf_counter()
    if method == "svm":
        model = svm.train_multiclass(strain, gamma, C, cfg.svm_tol, on_nonconvergence="warn")
    else:
        model = kos.fit(strain, gamma, **kos_options)
    train_time = time.perf_counter() - t0

    t0 = time.perf_counter()
    pred = model.predict(stest.X)
    predict_time = time.perf_counter() - t0
    return gamma, C, cv_score, pred, tune_time, train_time, predict_time


def run_benchmark(config: BenchConfig) -> list:
    """Run every (dataset, seed, method, mode) combination; one report each."""
    for m in config.methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}")
    for m in config.modes:
        if m not in MODES:
            raise ValueError(f"unknown mode {m!r}")
    reports = []
    for ds_cfg in config.datasets:
        for seed in config.seeds:
            train, strain, stest = _prepare(ds_cfg, seed, config)
            for method in config.methods:
                for mode in config.modes:
                    gamma, C, cv, pred, tt, tr, tp = _run_one(
                        method, mode, train, strain, stest, seed, config)
                    echo = config.echo()
                    echo["test_fraction"] = None if ds_cfg.test_path else ds_cfg.test_fraction
                    reports.append(EvalReport(
                        dataset=ds_cfg.name, n_classes=train.n_classes, method=method,
                        mode=mode, seed=seed, gamma=float(gamma),
                        C=None if C is None else float(C),
                        accuracy=accuracy(pred, stest.y),
                        precision=macro_precision(pred, stest.y, train.n_classes),
                        tune_time=tt, train_time=tr, predict_time=tp, cv_score=cv,
                        n_train=len(strain), n_test=len(stest), config=echo))
    return reports


def _pct(x: float) -> str:
    return f"{100.0 * x:.2f}%"


def _markdown(reports: list) -> str:
    datasets = list(dict.fromkeys((r.dataset, r.n_classes) for r in reports))
    methods = [m for m in METHODS if any(r.method == m for r in reports)]
    modes = [m for m in MODES if any(r.mode == m for r in reports)]

    def cell(ds, method, mode, keys):
        rows = [r for r in reports
                if (r.dataset, r.n_classes) == ds and r.method == method and r.mode == mode]
        if not rows:
            return None
        return [float(np.mean([getattr(r, k) for r in rows])) for k in keys]

    mode_names = {"learning": "Learning", "dmm": "DMM"}
    head = "| Name/Classes | " + " | ".join(
        f"{m.upper()} {' -- '.join(mode_names[x] for x in modes)} (Acc|Prec)"
        for m in methods) + " |"
    lines = ["Accuracy and macro precision, mean over seeds.", "", head,
             "|" + "---|" * (len(methods) + 1)]
    for ds in datasets:
        cells = []
        for m in methods:
            parts = []
            for mode in modes:
                v = cell(ds, m, mode, ("accuracy", "precision"))
                parts.append("n/a" if v is None else f"({_pct(v[0])}|{_pct(v[1])})")
            cells.append(" -- ".join(parts))
        lines.append(f"| {ds[0]}/{ds[1]} | " + " | ".join(cells) + " |")

    lines += ["", "Tuning + training time in seconds, mean over seeds.", "",
              "| Name/Classes | " + " | ".join(
                  f"{m.upper()} {' -- '.join(mode_names[x] for x in modes)}"
                  for m in methods) + " |",
              "|" + "---|" * (len(methods) + 1)]
    for ds in datasets:
        cells = []
        for m in methods:
            parts = []
            for mode in modes:
                v = cell(ds, m, mode, ("tune_time", "train_time"))
                parts.append("n/a" if v is None else f"{v[0] + v[1]:.3f}s")
            cells.append(" -- ".join(parts))
        lines.append(f"| {ds[0]}/{ds[1]} | " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def emit_report(reports, fmt: str = "json") -> bytes:
    """Serialize reports as ``json``, ``csv`` or ``markdown``.

    A single :class:`EvalReport` serializes to one JSON object; a list is
    wrapped in a versioned envelope. The CSV header is :data:`CSV_FIELDS`.
    The markdown layout pairs the learning and DMM results of each method
    in one cell, one row per dataset.
    """
    fmt = fmt.lower()
    single = isinstance(reports, EvalReport)
    items = [reports] if single else list(reports)
    if not items:
        raise ValueError("no reports to emit")
    if fmt == "json":
        if single:
            payload = {"format": REPORT_FORMAT, "version": REPORT_VERSION,
                       **items[0].to_dict()}
        else:
            payload = {"format": REPORT_FORMAT, "version": REPORT_VERSION,
                       "reports": [r.to_dict() for r in items]}
        return (json.dumps(payload, indent=2) + "\n").encode()
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, extrasaction="ignore",
                                lineterminator="\n")
        writer.writeheader()
        for r in items:
            writer.writerow(r.to_dict())
        return buf.getvalue().encode()
    if fmt in ("markdown", "md"):
        return _markdown(items).encode()
    raise ValueError(f"unknown report format {fmt!r}")
