from __future__ import annotations

import numpy as np
import pytest
from _oracles import random_instance
from hypothesis import given
from hypothesis import strategies as st

from varsigma import (
    Method,
    UndefinedEstimateError,
    lambda_max_lasso,
    lasso_cd,
    naive_variance,
    natural_variance,
    oracle_variance,
    organic_variance,
    reid_variance,
    sqrt_variance,
    standardize_columns,
)


def design(seed, n=30, p=50, **kw):
    X, y = random_instance(np.random.default_rng(seed), n, p, **kw)
    return standardize_columns(X), y


def test_toy_values(toy):
    sd, y = toy
    nat = natural_variance(sd, y, 0.5)
    assert nat.sigma2 == pytest.approx(1.75, abs=1e-12)
    assert (16 - float(np.sum((sd.X @ nat.beta) ** 2))) / 4 == pytest.approx(1.75)
    org = organic_variance(sd, y, 0.5)
    assert org.sigma2 == pytest.approx(2.0, abs=1e-12)
    assert naive_variance(sd, y, [1.5]).sigma2 == pytest.approx(0.25)
    reid = reid_variance(sd, y, 0.5)
    assert reid.sigma2 == pytest.approx(1 / 3)
    assert reid.nnz == 1


def test_trivial_cases(toy, rng):
    sd, y = toy
    assert naive_variance(sd, y, [0.0]).sigma2 == pytest.approx(4.0)
    assert naive_variance(sd, y, [2.0]).sigma2 == 0.0
    assert oracle_variance(np.zeros(4)).sigma2 == 0.0
    assert oracle_variance(np.ones(4)).sigma2 == 1.0
    sd, y = design(1)
    lmax = lambda_max_lasso(sd, y)
    for est in (natural_variance(sd, y, lmax), sqrt_variance(sd, y, 10.0)):
        assert est.sigma2 == pytest.approx(float(y @ y) / sd.n)
    reid = reid_variance(sd, y, lmax)
    assert reid.nnz == 0
    assert reid.sigma2 == pytest.approx(naive_variance(sd, y, np.zeros(sd.p)).sigma2)


def test_organic_zero_correlation():
    sd = standardize_columns(np.array([[1.0], [-1.0]]))
    est = organic_variance(sd, np.array([3.0, 3.0]), 0.2)
    assert est.sigma2 == pytest.approx(9.0)


def test_reid_undefined_when_saturated():
    sd, y = design(2, n=10, p=40)
    with pytest.raises(UndefinedEstimateError):
        reid_variance(sd, y, 1e-5)


def test_oracle_concentration():
    rng = np.random.default_rng(3)
    n, reps = 200, 400
    vals = np.array([oracle_variance(2.0 * rng.standard_normal(n)).sigma2 / 4.0 for _ in range(reps)])
    # mean 1, variance 2/n
    assert abs(vals.mean() - 1.0) <= 3 * np.sqrt(2.0 / n / reps)
    assert vals.var() == pytest.approx(2.0 / n, rel=0.25)


@given(st.integers(0, 1000), st.floats(0.02, 1.0))
def test_identities(seed, frac):
    sd, y = design(seed)
    lam = frac * lambda_max_lasso(sd, y)
    nat = natural_variance(sd, y, lam)
    assert nat.identity_ok
    # additive correction: optimal value minus residual mean square is the penalty
    naive = naive_variance(sd, y, nat.beta).sigma2
    assert nat.sigma2 - naive == pytest.approx(2 * lam * np.abs(nat.beta).sum(), abs=1e-9)
    org = organic_variance(sd, y, lam)
    assert org.identity_ok
    assert org.method is Method.ORGANIC


@given(st.integers(0, 1000))
def test_monotone_in_lambda(seed):
    sd, y = design(seed)
    grid = np.geomspace(1e-3, 1.0, 8) * lambda_max_lasso(sd, y)
    nat = [natural_variance(sd, y, lam).sigma2 for lam in grid]
    org = [organic_variance(sd, y, lam).sigma2 for lam in grid]
    assert np.all(np.diff(nat) >= -1e-9)
    assert np.all(np.diff(org) >= -1e-9)


@pytest.mark.parametrize("t", [0.5, 2.0, 10.0])
def test_organic_scale_equivariance(t):
    sd, y = design(4)
    lam = 0.1
    a = organic_variance(sd, y, lam)
    b = organic_variance(sd, t * y, lam)
    assert b.sigma2 == pytest.approx(t * t * a.sigma2, rel=1e-10)
    np.testing.assert_allclose(b.beta, t * a.beta, rtol=1e-8, atol=1e-12 * t)


def test_naive_is_lasso_residual(rng):
    sd, y = design(5)
    fit = lasso_cd(sd, y, 0.2)
    r = y - sd.X @ fit.beta
    assert naive_variance(sd, y, fit.beta).sigma2 == pytest.approx(float(r @ r) / sd.n)


def test_summary_fields(toy):
    sd, y = toy
    s = natural_variance(sd, y, 0.5).summary()
    assert list(s) == ["method", "sigma2", "lambda", "nnz", "converged", "duality_gap", "identity_residual"]
    assert s["method"] == "natural" and s["nnz"] == 1
