"""Variance estimates on one simulated data set.

Draws one replication of the equicorrelated model, fits every estimator at
its usual tuning value and compares each with the true sigma^2 and with the
oracle n^-1 ||eps||^2.

    python demos/01_estimators.py
"""

from __future__ import annotations

from varsigma import (
    lambda_fixed,
    naive_variance,
    natural_variance,
    oracle_variance,
    organic_variance,
    reid_variance,
    sqrt_variance,
    standardize_columns,
)
from varsigma.simulation import SimulationSpec, generate_replication
from varsigma.tuning import Method, grid_for, kfold_cv

spec = SimulationSpec(n=100, p=500, rho=0.5, alpha=0.5, tau=1.0, seed=7)
truth = generate_replication(spec)
sd = standardize_columns(truth.X)
y = truth.y
print(f"n={spec.n} p={spec.p} nonzeros={truth.support.size} true sigma^2={truth.sigma2:.4f}")
print(f"oracle n^-1 ||eps||^2 = {oracle_variance(truth.eps).sigma2:.4f}\n")

# Lasso family: one cross-validated lambda shared by naive, Reid and natural.
cv = kfold_cv(sd, y, Method.NATURAL, grid_for(Method.NATURAL, sd, y), K=5, seed=1)
lam = cv.chosen_lambda
nat = natural_variance(sd, y, lam)
print(f"lasso CV lambda = {lam:.4f}, {nat.nnz} nonzeros")
print(f"  naive   {naive_variance(sd, y, nat.beta).sigma2:8.4f}")
print(f"  reid    {reid_variance(sd, y, lam).sigma2:8.4f}")
print(f"  natural {nat.sigma2:8.4f}   (identity residual {nat.identity_residual:.1e})")

# The organic lasso needs no noise level in its tuning value.
lam0 = lambda_fixed(sd.n, sd.p, "lambda0")
lam2 = lambda_fixed(sd.n, sd.p, "lambda2")
org = organic_variance(sd, y, lam2)
print(f"organic at lambda2 = {lam2:.4f}: {org.sigma2:8.4f}  ({org.nnz} nonzeros, gap {org.duality_gap:.1e})")

sq = sqrt_variance(sd, y, lam0)
print(f"square-root lasso at lambda0 = {lam0:.4f}: {sq.sigma2:8.4f}")

# Scale equivariance: tripling y triples sigma at a fixed lambda.
org3 = organic_variance(sd, 3 * y, lam2)
print(f"\norganic sigma on 3y / sigma on y = {org3.sigma / organic_variance(sd, y, lam2).sigma:.12f}")
