"""
Soft-margin SVM trained by SMO
==============================

Binary problems are solved in the dual; several classes are handled by
one-vs-one voting. The penalty C still has to be chosen, here by
cross-validation with gamma fixed by the geometric rule.
"""

import numpy as np

from kernelgamma import dmm, svm
from kernelgamma.bench import accuracy
from kernelgamma.dataset import Dataset
from kernelgamma.geometry import compute_geometry
from kernelgamma.tuning import GridSpec, search_c

rng = np.random.default_rng(0)
centers = np.array([[0.0, 0.0], [3.0, 0.0], [1.5, 2.5]])
X = np.vstack([c + 0.8 * rng.standard_normal((80, 2)) for c in centers])
y = np.repeat([0, 1, 2], 80)
ds = Dataset(X, y, ("a", "b", "c"), "three blobs")

gamma = dmm.estimate(compute_geometry(ds)).gamma
best = search_c(ds, gamma, GridSpec(Cs=(0.1, 1.0, 10.0, 100.0)))
print(f"gamma={gamma:.4f}, best C={best.C} (CV accuracy {best.score:.4f})")

model = svm.train_multiclass(ds, gamma, best.C)
for pair, m in model.models.items():
    print(f"pair {pair}: {m.dual_coef.size} support vectors, {m.n_iter} SMO steps")

Q = rng.uniform(-1, 4, (5, 2))
print("votes:\n", model.votes(Q))
print("predicted labels:", [ds.labels[c] for c in model.predict(Q)])
print("training accuracy:", round(accuracy(model.predict(X), y), 4))

# Convergence is checked: the cap raises by default and keeps the model.
try:
    svm.train_multiclass(ds, gamma, 1000.0, max_iter=5)
except svm.SvmConvergenceError as exc:
    print("stopped early:", exc)
