"""Solution paths of the lasso and the l1-squared problem, and the map between them.

The lasso solution at lambda solves the l1-squared problem at
nu = lambda / (2 ||beta||_1). This script walks a lasso path, maps every
point and refits, then prints the optimal values, which are the natural and
organic variance estimates along the way.

    python demos/02_paths.py
"""

from __future__ import annotations

import numpy as np

from varsigma import PenaltyKind, lasso_cd, make_grid, organic_cd, path_map, standardize_columns
from varsigma.simulation import SimulationSpec, generate_replication

truth = generate_replication(SimulationSpec(n=60, p=120, rho=0.3, alpha=0.4, seed=3))
sd = standardize_columns(truth.X)
y = truth.y
grid = make_grid(sd, y, PenaltyKind.L1, count=12, ratio=0.02)

print(f"true sigma^2 = {truth.sigma2:.3f}")
print(f"{'lambda':>8} {'nnz':>4} {'natural':>9} {'nu':>8} {'organic':>9} {'max|diff|':>10}")
for lam in grid.values[1:]:
    nat = lasso_cd(sd, y, lam)
    nu = path_map(nat.beta, lam, "natural_to_organic")
    org = organic_cd(sd, y, nu)
    diff = float(np.max(np.abs(org.beta - nat.beta)))
    print(f"{lam:8.4f} {nat.nnz:4d} {nat.objective:9.4f} {nu:8.4f} {org.objective:9.4f} {diff:10.1e}")

# Same coefficients, different optimal values: the organic value adds
# 2 nu ||b||_1^2 = lambda ||b||_1, half the lasso penalty.
