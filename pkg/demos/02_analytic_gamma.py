"""
Choosing the RBF width from class geometry
==========================================

Instead of searching a grid, gamma is read off two numbers: the largest
class diameter ``D_max`` and the root-mean-square of the smallest distances
between classes ``d_av``. Then ``gamma = 1 / (D_max * d_av)``.
"""

import numpy as np

from kernelgamma import dmm
from kernelgamma.dataset import apply_scaling, fit_scaling, load_builtin
from kernelgamma.geometry import compute_geometry, feature_diameter_sq, feature_distance_sq

ds = load_builtin("breast_cancer")
ds = apply_scaling(ds, fit_scaling(ds))

geom = compute_geometry(ds)
print("class diameters:", np.round(geom.diameters, 4))
print(f"D_max={geom.d_max:.4f}  d_min={geom.d_min_interclass:.4f}  d_av={geom.d_av:.4f}")

avg = dmm.estimate(geom)
low = dmm.estimate(geom, "min")
print(f"avg variant: gamma={avg.gamma:.4f} sigma={avg.sigma:.4f}")
print(f"min variant: gamma={low.gamma:.4f} sigma={low.sigma:.4f}")

# The rule balances two wishes. A small gamma keeps each class compact in
# feature space; a large one pushes classes apart. Squared feature-space
# distances saturate at 2, so both move together:
for g in (0.1 * avg.gamma, avg.gamma, 10 * avg.gamma):
    print(f"gamma={g:8.4f}  class diameter^2={feature_diameter_sq(g, geom.d_max):.4f}"
          f"  class gap^2={feature_distance_sq(g, geom.d_av):.4f}")

# The weighted trade-off lam*gamma*D^2 + (1-lam)/(gamma*d^2) has a single
# minimizer for every lam; at lam = 1/2 it is the min-variant gamma.
for lam in (0.25, 0.5, 0.75):
    print(f"lam={lam}: minimizer {dmm.stationary_gamma(lam, geom):.4f}")
assert dmm.stationary_gamma(0.5, geom) == low.gamma

# Large classes can be subsampled for the geometry pass.
rough = dmm.estimate(compute_geometry(ds, max_class_size=100, seed=1))
print(f"subsampled estimate: {rough.gamma:.4f}")
