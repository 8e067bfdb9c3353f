"""
Loading, scaling and splitting data
===================================

Datasets come from LIBSVM sparse files, CSV tables or the two bundled
tables. Labels are remapped to 0-based class ids.
"""

import tempfile
from pathlib import Path

import numpy as np

from kernelgamma.dataset import (apply_scaling, fit_scaling, load_builtin, load_split,
                                 parse_sparse, save_split, split_indices, to_sparse)

# A sparse file: label followed by 1-based index:value pairs, zeros omitted.
text = """\
# two features, three classes
+1 1:0.5 2:1.0
-1 2:3.0
+1 1:0.7
3 1:2.0 2:2.0
"""
ds = parse_sparse(text)
print("labels:", ds.labels, "ids:", ds.y.tolist())
print(ds.X)

# The bundled Pima diabetes table (768 samples, 8 features).
diabetes = load_builtin("diabetes")
print(diabetes.name, diabetes.X.shape, "class sizes", diabetes.class_sizes().tolist())

# Stratified split, then min-max scaling fitted on the training part only.
train_idx, test_idx = split_indices(diabetes.y, 0.2, seed=0)
train, test = diabetes.subset(train_idx), diabetes.subset(test_idx)
spec = fit_scaling(train, (0.0, 1.0))
train_s, test_s = apply_scaling(train, spec), apply_scaling(test, spec)
print("train range", train_s.X.min(), train_s.X.max())
print("test range ", test_s.X.min().round(3), test_s.X.max().round(3))

# Splits can be cached so later runs reuse exactly the same partition.
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "split.json"
    save_split(path, train_idx, test_idx, seed=0, test_fraction=0.2)
    tr, te, meta = load_split(path)
    assert np.array_equal(tr, train_idx) and np.array_equal(te, test_idx)
    # and any dataset can be written back out in sparse form
    (Path(tmp) / "toy.libsvm").write_text(to_sparse(ds))
print("split round trip ok:", meta)
