from __future__ import annotations

import math

import numpy as np
import pytest

from varsigma import VarsigmaError
from varsigma.seeding import derive_seed, make_rng
from varsigma.simulation import (
    BenchmarkSettings,
    MethodConfig,
    SimulationSpec,
    check_deterministic_bounds,
    check_mse_bound,
    equicorrelated_quadratic_form,
    gen_coefficients,
    gen_design,
    gen_response,
    generate_replication,
    laplace_inverse_cdf,
    mse_bound,
    n_nonzero,
    run_benchmark,
)

FAST = BenchmarkSettings(grid_count=15, grid_ratio=1e-2, lambda3_reps=100)


def test_seeding_is_pure():
    a = make_rng(7, 3, 1).standard_normal(5)
    b = make_rng(7, 3, 1).standard_normal(5)
    c = make_rng(7, 3, 2).standard_normal(5)
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)
    assert derive_seed(1, 2) == derive_seed(1, 2) != derive_seed(1, 3)


def test_design_factor_structure():
    X = gen_design(10_000, 2, 0.9, make_rng(0))
    r = np.corrcoef(X.T)[0, 1]
    # sd of a sample correlation is about (1 - r^2) / sqrt(n)
    assert abs(r - 0.9) <= 3 * (1 - 0.81) / math.sqrt(10_000)
    X0 = gen_design(20_000, 3, 0.0, make_rng(1))
    np.testing.assert_allclose(X0.var(axis=0), 1.0, atol=0.05)
    np.testing.assert_array_equal(gen_design(5, 4, 0.3, make_rng(2)), gen_design(5, 4, 0.3, make_rng(2)))
    with pytest.raises(VarsigmaError):
        gen_design(5, 4, 1.0, make_rng(0))


def test_sparsity_counts():
    assert n_nonzero(100, 0.5) == 10
    assert n_nonzero(100, 0.9) == 64  # 100^0.9 = 63.0957...
    beta, support = gen_coefficients(100, 500, 0.5, make_rng(3))
    assert support.size == 10 and np.count_nonzero(beta) == 10
    assert np.all(beta[np.setdiff1d(np.arange(500), support)] == 0)
    with pytest.raises(VarsigmaError):
        gen_coefficients(100, 5, 0.5, make_rng(3))


def test_laplace_magnitude():
    v = laplace_inverse_cdf(make_rng(4).random(100_000))
    # |V| ~ Exp(1): mean 1, sd 1
    assert abs(np.abs(v).mean() - 1.0) <= 3 / math.sqrt(100_000)
    assert abs(v.mean()) <= 3 * math.sqrt(2) / math.sqrt(100_000)


def test_sigma2_closed_form():
    beta = np.zeros(10)
    beta[:2] = 1.0
    X = np.zeros((4, 10))
    _, _, s2 = gen_response(X, beta, 3.0, 0.5, make_rng(0))
    assert s2 == pytest.approx(1.0)
    assert equicorrelated_quadratic_form(beta, 0.0) == 2.0
    Sigma = np.full((10, 10), 0.3) + 0.7 * np.eye(10)
    b = make_rng(5).standard_normal(10)
    assert equicorrelated_quadratic_form(b, 0.3) == pytest.approx(b @ Sigma @ b)
    with pytest.raises(VarsigmaError):
        gen_response(X, np.zeros(10), 1.0, 0.5, make_rng(0))


def test_spec_validation():
    with pytest.raises(VarsigmaError):
        SimulationSpec(n=100, p=10, alpha=0.9)
    with pytest.raises(VarsigmaError):
        SimulationSpec(alpha=1.0)
    with pytest.raises(VarsigmaError):
        SimulationSpec(tau=0.0)


def test_replication_is_pure():
    spec = SimulationSpec(n=30, p=50, seed=4)
    a, b = generate_replication(spec, 2), generate_replication(spec, 2)
    np.testing.assert_array_equal(a.y, b.y)
    np.testing.assert_array_equal(a.y, a.X @ a.beta_star + a.eps)
    assert not np.array_equal(a.y, generate_replication(spec, 3).y)


def test_method_config_parse():
    assert MethodConfig.parse("organic").tuning == "cv"
    assert MethodConfig.parse("sqrt:lambda0").label == "sqrt(lambda0)"
    assert MethodConfig.parse("oracle").label == "oracle"
    assert MethodConfig.parse("natural:0.25").tuning == "0.25"
    for bad in ("natural:fast", "natural:-1", "ridge"):
        with pytest.raises((VarsigmaError, ValueError)):
            MethodConfig.parse(bad)


def test_oracle_benchmark_mean():
    spec = SimulationSpec(n=100, p=20, rho=0.3, alpha=0.3)
    rep = run_benchmark(spec, ["oracle"], reps=200, settings=FAST)
    s = rep.summaries[0]
    # ratio = sigma_hat / sigma; its square has mean 1 and variance 2/n
    ratios = np.array([r.ratio for r in rep.raw])
    assert abs(np.mean(ratios**2) - 1.0) <= 3 * math.sqrt(2 / 100) / math.sqrt(200)
    assert s.n_ok == 200 and s.mse_se >= 0


def test_benchmark_single_rep_and_determinism():
    spec = SimulationSpec(n=30, p=40, rho=0.3, alpha=0.3, seed=2)
    one = run_benchmark(spec, ["natural:lambda2"], reps=1, settings=FAST)
    s = one.summaries[0]
    assert s.mse_se == 0.0 and s.ratio_se == 0.0
    assert s.ratio == one.raw[0].ratio
    methods = ["naive", "reid", "natural", "organic", "sqrt", "sqrt:lambda0", "organic:lambda3", "oracle"]
    a = run_benchmark(spec, methods, reps=3, settings=FAST, threads=1)
    b = run_benchmark(spec, methods, reps=3, settings=FAST, threads=3)
    assert a.summary_csv() == b.summary_csv()
    assert a.raw_csv() == b.raw_csv()
    assert len(a.raw) == 3 * len(methods)


def test_benchmark_records_method_failures():
    # alpha close to 1: many nonzeros, CV picks dense fits and Reid may saturate
    spec = SimulationSpec(n=20, p=60, rho=0.0, alpha=0.95, tau=3.0)
    rep = run_benchmark(spec, ["reid:0.0001", "natural:0.0001"], reps=2, settings=FAST)
    reid = rep.lookup("reid(0.0001)")
    assert reid.n_failed == 2 and reid.n_ok == 0
    assert all(r.error.startswith("UndefinedEstimateError") for r in rep.raw if r.method == "reid(0.0001)")
    assert rep.lookup("natural(0.0001)").n_ok == 2


@pytest.mark.parametrize("which", ["lemma1", "lemma4"])
def test_deterministic_bounds_small(which):
    spec = SimulationSpec(n=50, p=100, rho=0.3, alpha=0.5, seed=1)
    for r in range(10):
        chk = check_deterministic_bounds(generate_replication(spec, r), which)
        assert chk.passed, chk


def test_theorem4_reports_slack():
    chk = check_deterministic_bounds(generate_replication(SimulationSpec(n=50, p=100), 0), "theorem4")
    assert chk.slack == pytest.approx(chk.bound - chk.observed)
    with pytest.raises(VarsigmaError):
        check_deterministic_bounds(generate_replication(SimulationSpec(n=50, p=100), 0), "lemma9")


def test_mse_bound_formula():
    n, p, M = 100, 500, 1.5
    assert mse_bound("thm1", 0.0, 1.0, n, p, M) == pytest.approx(2.0 / n)
    lead = math.sqrt(8 * M + 8 * p ** (1 - 8 * M) / math.log(p))
    expect = (lead * 4.0 * math.sqrt(math.log(p) / n) + math.sqrt(2 / n)) ** 2
    assert mse_bound("thm3", 2.0, 1.0, n, p, M) == pytest.approx(expect)
    with pytest.raises(VarsigmaError):
        mse_bound("thm2", 1.0, 1.0, n, p, M)


def test_mse_check_thm3_does_not_use_sigma():
    spec = SimulationSpec(n=50, p=100, rho=0.0, alpha=0.1, seed=3)
    chk = check_mse_bound(spec, "thm3", reps=20)
    assert chk.lam == pytest.approx(math.sqrt(2 * 1.5 * math.log(100) / 50))
    with pytest.raises(VarsigmaError):
        check_mse_bound(spec, "thm3", M=1.0)
