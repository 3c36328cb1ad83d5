import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dlingam.dataset import Dataset, center
from dlingam.errors import NumericalError
from dlingam.regress import (
    is_strictly_lower_triangular_under,
    multi_regress,
    regression_coefficient,
    residual_matrix,
    simple_regress_residual,
)
from dlingam.simulate import sample_external


def test_perfect_fit_gives_zero_residual():
    xj = np.array([1.0, -2.0, 0.5, 0.5])
    np.testing.assert_allclose(simple_regress_residual(2 * xj, xj), 0.0, atol=1e-14)


def test_independent_coefficient_near_zero():
    rng = np.random.default_rng(3)
    xi, xj = rng.uniform(-1, 1, (2, 10000))
    assert abs(regression_coefficient(xi, xj)) < 0.05


def test_coefficient_matches_normal_equations():
    xi = np.array([1.0, -1.0, 0.0])
    xj = np.array([1.0, 0.0, -1.0])
    beta = regression_coefficient(xi, xj)
    oracle = np.linalg.lstsq(xj[:, None], xi, rcond=None)[0][0]
    assert beta == pytest.approx(0.5)
    assert beta == pytest.approx(oracle)


def test_constant_regressor_rejected():
    with pytest.raises(NumericalError):
        regression_coefficient([1.0, 2.0, 3.0], [4.0, 4.0, 4.0])


def test_residual_matrix_two_active_has_one_row():
    d = Dataset(np.random.default_rng(0).normal(size=(4, 30)))
    res = residual_matrix(d, 2, [0, 2])
    assert res.values.shape == (1, 30)
    assert res.kept == (0,)


def test_residual_matrix_recovers_disturbance():
    rng = np.random.default_rng(5)
    n = 5000
    e1 = sample_external("c", n, 1.0, rng)
    e2 = sample_external("c", n, 1.0, rng)
    x2 = e2
    x1 = 1.5 * x2 + e1
    d = center(Dataset(np.vstack([x1, x2])))
    res = residual_matrix(d, 1, [0, 1])
    assert np.corrcoef(res.values[0], e1)[0, 1] > 0.99


def test_residual_matrix_skip_passes_through():
    d = Dataset(np.random.default_rng(1).normal(size=(3, 20)))
    res = residual_matrix(d, 0, [0, 1, 2], skip=[2])
    np.testing.assert_array_equal(res.values[1], d.values[2])


def test_multi_regress_recovers_coefficients():
    rng = np.random.default_rng(7)
    n = 5000
    x = rng.uniform(-1, 1, (2, n))
    y = 0.8 * x[0] - 1.5 * x[1] + rng.normal(0, 0.1, n)
    coef = multi_regress(y - y.mean(), x - x.mean(axis=1, keepdims=True))
    np.testing.assert_allclose(coef, [0.8, -1.5], atol=0.05)


def test_multi_regress_empty_regressors():
    coef = multi_regress(np.arange(5.0), np.zeros((0, 5)))
    assert coef.shape == (0,)


def test_multi_regress_duplicate_rows_ill_conditioned():
    x = np.random.default_rng(0).normal(size=50)
    with pytest.raises(NumericalError) as info:
        multi_regress(x, np.vstack([x, x]))
    assert info.value.condition > 1e12


def test_multi_regress_orthonormal_regressors():
    rng = np.random.default_rng(2)
    q, _ = np.linalg.qr(rng.normal(size=(40, 3)))
    X = q.T * np.sqrt(40)
    y = rng.normal(size=40)
    np.testing.assert_allclose(multi_regress(y, X), X @ y / 40, atol=1e-12)


def test_triangularity_examples():
    assert is_strictly_lower_triangular_under(np.zeros((3, 3)), (2, 0, 1))
    b = np.zeros((2, 2))
    b[0, 1] = 0.7
    assert is_strictly_lower_triangular_under(b, (1, 0))
    assert not is_strictly_lower_triangular_under(b, (0, 1))
    with pytest.raises(ValueError):
        is_strictly_lower_triangular_under(b, (0, 0))


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 8), st.integers(0, 2**32 - 1))
def test_scrambled_lower_triangular_round_trip(p, seed):
    rng = np.random.default_rng(seed)
    lower = np.tril(rng.normal(size=(p, p)), k=-1)
    perm = rng.permutation(p)
    b = np.empty_like(lower)
    b[np.ix_(perm, perm)] = lower
    assert is_strictly_lower_triangular_under(b, tuple(perm))


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_multi_regress_residual_orthogonal(k, seed):
    rng = np.random.default_rng(seed)
    n = 200
    X = rng.normal(size=(k, n)) * rng.uniform(0.1, 10, (k, 1))
    X -= X.mean(axis=1, keepdims=True)
    y = rng.normal(size=n) + rng.normal(size=k) @ X
    resid = y - multi_regress(y, X) @ X
    scale = np.linalg.norm(X, axis=1) * np.linalg.norm(y)
    assert np.all(np.abs(X @ resid) / scale < 1e-8)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(3, 50))
def test_projection_shrinks_variance(seed, n):
    rng = np.random.default_rng(seed)
    xj = rng.normal(size=n)
    xi = rng.uniform(-5, 5) * xj + rng.standard_t(2, size=n)
    assert np.var(simple_regress_residual(xi, xj)) <= np.var(xi) + 1e-10


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 6), st.data())
def test_residual_matrix_shape(p, data):
    d = Dataset(np.random.default_rng(p).normal(size=(p, 25)))
    active = data.draw(st.lists(st.integers(0, p - 1), min_size=2, max_size=p, unique=True))
    j = data.draw(st.sampled_from(active))
    assert residual_matrix(d, j, active).values.shape == (len(active) - 1, 25)
