"""Labeled dataset loading, min-max scaling and stratified splitting.

Two text formats are understood:

* LIBSVM sparse format, ``<label> <index>:<value> ...`` with 1-based,
  strictly increasing indices. Features are densified on load.
* Comma separated numeric tables with an optional header row.

Labels are remapped to contiguous 0-based ids; the original label values are
kept in :attr:`Dataset.labels` for reporting.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

__all__ = [
    "DataError",
    "Dataset",
    "ScalingSpec",
    "parse_sparse",
    "parse_csv",
    "load",
    "load_builtin",
    "BUILTIN_DATASETS",
    "to_sparse",
    "fit_scaling",
    "apply_scaling",
    "stratified_split",
    "split_indices",
    "save_split",
    "load_split",
]

SPLIT_FORMAT = "kernelgamma-split"
SPLIT_VERSION = 1

#: name -> (file, default test fraction). The fractions give test sets of
#: 154 and 171 samples respectively.
BUILTIN_DATASETS = {
    "diabetes": ("diabetes.csv", 0.2),
    "breast_cancer": ("breast_cancer.csv", 0.25),
}


class DataError(ValueError):
    """Malformed or inconsistent input data."""


def _as_text(data) -> str:
    if isinstance(data, (bytes, bytearray)):
        return data.decode("utf-8")
    if hasattr(data, "read"):
        return _as_text(data.read())
    return str(data)


def _number(value: float):
    # keep integer labels as ints so that reports show "1" rather than "1.0"
    return int(value) if float(value).is_integer() else float(value)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Dense feature matrix with integer class ids.

    Parameters
    ----------
    X : ndarray, shape (n_samples, n_features)
    y : ndarray of int, shape (n_samples,)
        Class ids in ``[0, n_classes)``.
    labels : tuple
        Original label value of every class id.
    name : str
    """

    X: np.ndarray
    y: np.ndarray
    labels: tuple
    name: str = ""
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        X = np.array(self.X, dtype=np.float64, copy=True)
        y = np.array(self.y, dtype=np.int64, copy=True)
        if X.ndim != 2:
            raise DataError(f"feature matrix must be 2-D, got shape {X.shape}")
        if X.shape[1] < 1:
            raise DataError("feature dimension must be at least 1")
        if y.shape != (X.shape[0],):
            raise DataError("label vector does not match the number of samples")
        if not np.all(np.isfinite(X)):
            raise DataError("features contain NaN or Inf")
        n_classes = len(self.labels)
        if n_classes < 1:
            raise DataError("dataset needs at least one class")
        if y.size and (y.min() < 0 or y.max() >= n_classes):
            raise DataError("class id outside [0, n_classes)")
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "labels", tuple(self.labels))
        index = {c: np.flatnonzero(y == c) for c in range(n_classes)}
        for idx in index.values():
            idx.flags.writeable = False
        covered = sum(len(v) for v in index.values())
        if covered != len(y):
            raise DataError("class index does not partition the samples")
        object.__setattr__(self, "_index", index)

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.X.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.labels)

    @property
    def class_index(self) -> dict:
        """Map class id -> sorted sample indices."""
        return dict(self._index)

    def class_points(self, c: int) -> np.ndarray:
        return self.X[self._index[c]]

    def class_sizes(self) -> np.ndarray:
        return np.array([len(self._index[c]) for c in range(self.n_classes)])

    def subset(self, indices) -> "Dataset":
        """Samples at ``indices``; class ids and labels are kept unchanged."""
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(self.X[indices], self.y[indices], self.labels, self.name)

    def with_features(self, X) -> "Dataset":
        return Dataset(X, self.y, self.labels, self.name)

    def __len__(self):
        return self.n_samples

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.labels == other.labels
            and self.X.shape == other.X.shape
            and np.array_equal(self.X, other.X)
            and np.array_equal(self.y, other.y)
        )

    __hash__ = None


def _from_raw(features: list, raw_labels: list, name: str) -> Dataset:
    labels = sorted(set(raw_labels))
    remap = {lab: i for i, lab in enumerate(labels)}
    y = np.array([remap[lab] for lab in raw_labels], dtype=np.int64)
    return Dataset(np.asarray(features, dtype=np.float64), y,
                   tuple(_number(v) for v in labels), name)


def parse_sparse(data, name: str = "") -> Dataset:
    """Parse LIBSVM sparse text into a dense :class:`Dataset`.

    Blank lines and ``#`` comments are skipped. Raises :class:`DataError`
    with the 1-based line number on the first malformed line.
    """
    text = _as_text(data)
    rows = []
    raw_labels = []
    dim = 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        try:
            label = float(tokens[0])
        except ValueError:
            raise DataError(f"line {lineno}: bad label {tokens[0]!r}") from None
        if not math.isfinite(label):
            raise DataError(f"line {lineno}: non-finite label")
        entries = {}
        last = 0
        for tok in tokens[1:]:
            idx, sep, val = tok.partition(":")
            try:
                if not sep:
                    raise ValueError
                i = int(idx)
                v = float(val)
            except ValueError:
                raise DataError(f"line {lineno}: malformed token {tok!r}") from None
            if i <= last:
                raise DataError(
                    f"line {lineno}: indices must be 1-based and strictly increasing")
            if not math.isfinite(v):
                raise DataError(f"line {lineno}: non-finite value in {tok!r}")
            entries[i] = v
            last = i
        dim = max(dim, last)
        rows.append(entries)
        raw_labels.append(label)
    if not rows:
        raise DataError("empty input")
    if dim == 0:
        raise DataError("no features found")
    X = np.zeros((len(rows), dim))
    for r, entries in enumerate(rows):
        for i, v in entries.items():
            X[r, i - 1] = v
    return _from_raw(X, raw_labels, name)


def _is_number(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def parse_csv(data, label_column: int = 0, name: str = "") -> Dataset:
    """Parse a comma separated numeric table.

    A first row containing any non-numeric cell is treated as a header.
    ``label_column`` may be negative (``-1`` for the last column).
    """
    text = _as_text(data)
    lines = [(n, ln.strip()) for n, ln in enumerate(text.splitlines(), start=1)]
    lines = [(n, ln) for n, ln in lines if ln]
    if not lines:
        raise DataError("empty input")
    first = [c.strip() for c in lines[0][1].split(",")]
    if not all(_is_number(c) for c in first):
        lines = lines[1:]
        if not lines:
            raise DataError("no data rows after header")
    width = None
    features, raw_labels = [], []
    for lineno, line in lines:
        cells = [c.strip() for c in line.split(",")]
        if width is None:
            width = len(cells)
            if width < 2:
                raise DataError("need a label column and at least one feature")
            col = label_column if label_column >= 0 else width + label_column
            if not 0 <= col < width:
                raise DataError(f"label column {label_column} out of range")
        elif len(cells) != width:
            raise DataError(
                f"line {lineno}: ragged row ({len(cells)} cells, expected {width})")
        try:
            values = [float(c) for c in cells]
        except ValueError:
            raise DataError(f"line {lineno}: non-numeric cell") from None
        raw_labels.append(values.pop(col))
        features.append(values)
    return _from_raw(features, raw_labels, name)


def load(path, fmt: str | None = None, label_column: int = 0) -> Dataset:
    """Read a dataset file; the format is guessed from the extension."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"dataset file not found: {path}")
    if fmt is None:
        fmt = "csv" if path.suffix.lower() == ".csv" else "libsvm"
    text = path.read_text()
    if fmt == "csv":
        return parse_csv(text, label_column=label_column, name=path.stem)
    if fmt in ("libsvm", "sparse", "svmlight"):
        return parse_sparse(text, name=path.stem)
    raise DataError(f"unknown dataset format {fmt!r}")


def load_builtin(name: str) -> Dataset:
    """Load one of the bundled datasets (``diabetes``, ``breast_cancer``).

    ``diabetes`` is the Pima Indians diabetes table (768 x 8) and
    ``breast_cancer`` the original Wisconsin breast cancer table with
    incomplete records removed (683 x 9, labels 2 = benign, 4 = malignant).
    """
    try:
        fname, _ = BUILTIN_DATASETS[name]
    except KeyError:
        raise DataError(
            f"unknown builtin dataset {name!r}; choose from {sorted(BUILTIN_DATASETS)}"
        ) from None
    text = resources.files("kernelgamma.data").joinpath(fname).read_text()
    return parse_csv(text, label_column=0, name=name)


def to_sparse(ds: Dataset) -> str:
    """Serialize to LIBSVM text with the original labels.

    The last feature index is always written so that the feature dimension
    survives a round trip even when trailing columns are zero.
    """
    out = io.StringIO()
    d = ds.feature_dim
    for row, c in zip(ds.X, ds.y):
        parts = [repr(ds.labels[c])]
        for i, v in enumerate(row, start=1):
            if v != 0.0 or i == d:
                parts.append(f"{i}:{float(v)!r}")
        out.write(" ".join(parts) + "\n")
    return out.getvalue()


@dataclass(frozen=True)
class ScalingSpec:
    """Per-feature affine map fitted on training data."""

    minimum: np.ndarray
    maximum: np.ndarray
    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self):
        mn = np.asarray(self.minimum, dtype=np.float64)
        mx = np.asarray(self.maximum, dtype=np.float64)
        if mn.shape != mx.shape or mn.ndim != 1:
            raise DataError("scaling bounds must be 1-D arrays of equal length")
        if np.any(mn > mx):
            raise DataError("scaling minimum exceeds maximum")
        if not self.lo < self.hi:
            raise DataError("scaling range requires lo < hi")
        object.__setattr__(self, "minimum", mn)
        object.__setattr__(self, "maximum", mx)

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.minimum.size:
            raise DataError(
                f"dimension mismatch: spec has {self.minimum.size} features, "
                f"data has {X.shape[-1]}")
        span = self.maximum - self.minimum
        const = span == 0
        safe = np.where(const, 1.0, span)
        out = (X - self.minimum) / safe * (self.hi - self.lo) + self.lo
        return np.where(const, 0.5 * (self.lo + self.hi), out)

    def to_dict(self) -> dict:
        return {"min": self.minimum.tolist(), "max": self.maximum.tolist(),
                "range": [self.lo, self.hi]}

    @classmethod
    def from_dict(cls, d: dict) -> "ScalingSpec":
        lo, hi = d["range"]
        return cls(np.array(d["min"]), np.array(d["max"]), lo, hi)


def fit_scaling(ds: Dataset, feature_range: Sequence[float] = (0.0, 1.0)) -> ScalingSpec:
    lo, hi = feature_range
    return ScalingSpec(ds.X.min(axis=0), ds.X.max(axis=0), float(lo), float(hi))


def apply_scaling(ds: Dataset, spec: ScalingSpec) -> Dataset:
    return ds.with_features(spec.transform(ds.X))


def split_indices(y, test_fraction: float, seed: int):
    """Stratified (train, test) index arrays; see :func:`stratified_split`."""
    if not 0.0 < test_fraction < 1.0:
        raise DataError("test_fraction must lie in (0, 1)")
    y = np.asarray(y)
    rng = np.random.default_rng(seed)
    train, test = [], []
    for c in np.unique(y):
        idx = np.flatnonzero(y == c)
        if idx.size < 2:
            raise DataError(f"class {c} has fewer than 2 samples; cannot split")
        n_test = int(math.floor(test_fraction * idx.size + 0.5))
        n_test = min(max(n_test, 1), idx.size - 1)
        perm = rng.permutation(idx)
        test.append(perm[:n_test])
        train.append(perm[n_test:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def stratified_split(ds: Dataset, test_fraction: float, seed: int):
    """Split every class with ``round(test_fraction * size)`` test samples.

    Each class keeps at least one training and one test sample. The split
    depends only on ``(ds, test_fraction, seed)``.
    """
    train, test = split_indices(ds.y, test_fraction, seed)
    return ds.subset(train), ds.subset(test)


def save_split(path, train_idx, test_idx, *, seed: int, test_fraction: float,
               dataset: str = "") -> None:
    payload = {
        "format": SPLIT_FORMAT,
        "version": SPLIT_VERSION,
        "dataset": dataset,
        "seed": seed,
        "test_fraction": test_fraction,
        "train": [int(i) for i in train_idx],
        "test": [int(i) for i in test_idx],
    }
    Path(path).write_text(json.dumps(payload))


def load_split(path):
    """Return ``(train_idx, test_idx, metadata)`` from a cached split file."""
    payload = json.loads(Path(path).read_text())
    if payload.get("format") != SPLIT_FORMAT:
        raise DataError(f"{path}: not a split file")
    if payload.get("version") != SPLIT_VERSION:
        raise DataError(f"{path}: unsupported split version {payload.get('version')}")
    meta = {k: payload[k] for k in ("dataset", "seed", "test_fraction")}
    return (np.array(payload["train"], dtype=np.int64),
            np.array(payload["test"], dtype=np.int64), meta)
