from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from varsigma import (
    Dataset,
    PenaltyKind,
    PenaltySpec,
    VarsigmaError,
    max_abs_correlation,
    objective,
    soft_threshold,
    standardize_columns,
)

finite = st.floats(-1e3, 1e3, allow_nan=False)


def test_dataset_validation():
    with pytest.raises(VarsigmaError):
        Dataset(np.ones(3), np.ones((4, 1)))
    with pytest.raises(VarsigmaError):
        Dataset(np.ones(2), np.array([[1.0], [np.nan]]))
    with pytest.raises(VarsigmaError):
        Dataset(np.ones((2, 1)), np.ones((2, 1)))
    d = Dataset([1.0, 2.0], [[1.0], [2.0]])
    with pytest.raises(ValueError):
        d.y[0] = 5.0


def test_centered():
    d = Dataset([1.0, 2.0, 6.0], [[1.0, 0.0], [2.0, 0.0], [3.0, 3.0]]).centered()
    np.testing.assert_allclose(d.y.mean(), 0.0, atol=1e-15)
    np.testing.assert_allclose(d.X.mean(axis=0), 0.0, atol=1e-15)


@pytest.mark.parametrize(
    "col, expected, scale",
    [((1, 1, 1, 1), (1, 1, 1, 1), 1.0), ((2, 2, 2, 2), (1, 1, 1, 1), 2.0)],
)
def test_standardize_examples(col, expected, scale):
    sd = standardize_columns(np.array(col, dtype=float)[:, None])
    np.testing.assert_allclose(sd.X[:, 0], expected)
    assert sd.scales[0] == pytest.approx(scale)
    assert not sd.dropped


def test_standardize_drops_zero_column():
    X = np.column_stack([np.zeros(4), np.arange(1.0, 5.0)])
    sd = standardize_columns(X)
    assert sd.dropped == frozenset({0})
    assert np.all(sd.X[:, 0] == 0)
    assert np.sum(sd.X[:, 1] ** 2) == pytest.approx(4.0)
    with pytest.warns(RuntimeWarning):
        assert standardize_columns(np.zeros((4, 2))).degenerate


def test_scale_round_trip(rng):
    X = rng.standard_normal((10, 3)) * [1.0, 5.0, 0.1]
    sd = standardize_columns(X)
    b = rng.standard_normal(3)
    # X_std b_std = X b_orig
    np.testing.assert_allclose(sd.X @ b, X @ sd.to_original_scale(b), atol=1e-12)
    np.testing.assert_allclose(sd.to_standardized_scale(sd.to_original_scale(b)), b)


@pytest.mark.filterwarnings("ignore:all columns dropped")
@given(arrays(np.float64, (6, 3), elements=finite))
def test_standardize_idempotent(X):
    sd = standardize_columns(X)
    twice = standardize_columns(sd.X)
    keep = sd.kept_mask()
    np.testing.assert_allclose(twice.X[:, keep], sd.X[:, keep], atol=1e-12)
    np.testing.assert_allclose(np.sum(sd.X[:, keep] ** 2, axis=0), 6.0, rtol=1e-12)


@pytest.mark.parametrize("a, b, out", [(3, 1, 2), (-3, 1, -2), (0.5, 1, 0)])
def test_soft_threshold_examples(a, b, out):
    assert soft_threshold(a, b) == out


@given(finite, st.floats(0, 1e3))
def test_soft_threshold_shrinks(a, b):
    s = soft_threshold(a, b)
    assert abs(s) <= abs(a)
    assert soft_threshold(a, 0.0) == a
    assert s == pytest.approx(math.copysign(max(abs(a) - b, 0.0), a))


def test_soft_threshold_rejects_negative():
    with pytest.raises(VarsigmaError):
        soft_threshold(1.0, -1.0)


def test_objective_examples(toy):
    sd, y = toy
    assert objective(sd, y, [1.5], PenaltySpec(0.5, PenaltyKind.L1)) == pytest.approx(1.75)
    assert objective(sd, y, [1.0], PenaltySpec(0.5, PenaltyKind.L1_SQUARED)) == pytest.approx(2.0)
    for kind in PenaltyKind:
        assert objective(sd, y, [0.0], PenaltySpec(0.3, kind)) == pytest.approx(4.0)


@given(arrays(np.float64, 3, elements=st.floats(-5, 5)), st.floats(0, 10))
def test_objectives_agree_on_unit_l1(beta, lam):
    X = np.eye(4)[:, :3] * 2.0
    y = np.arange(4.0)
    l1 = np.abs(beta).sum()
    f1 = objective(X, y, beta, PenaltySpec(lam, PenaltyKind.L1))
    f2 = objective(X, y, beta, PenaltySpec(lam, PenaltyKind.L1_SQUARED))
    assert f1 >= 0 and f2 >= 0
    if l1 > 0:
        unit = beta / l1
        assert objective(X, y, unit, PenaltySpec(lam, PenaltyKind.L1)) == pytest.approx(
            objective(X, y, unit, PenaltySpec(lam, PenaltyKind.L1_SQUARED))
        )


def test_max_abs_correlation(toy):
    sd, _ = toy
    assert max_abs_correlation(sd, np.zeros(4)) == 0.0
    assert max_abs_correlation(sd, np.full(4, 2.0)) == pytest.approx(2.0)
    assert max_abs_correlation(sd, np.array([1.0, -1.0, 1.0, -1.0])) == 0.0


def test_penalty_spec_rejects_negative():
    with pytest.raises(VarsigmaError):
        PenaltySpec(-1.0)
