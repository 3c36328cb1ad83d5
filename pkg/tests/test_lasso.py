import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import CHAIN_B, CHAIN_ORDER, chain_data
from dlingam.core import AdjacencyMatrix, estimate_b
from dlingam.dataset import center
from dlingam.errors import ConvergenceError
from dlingam.lasso import (
    LassoConfig,
    adaptive_lasso,
    fold_assignment,
    lambda_max,
    lasso_coordinate_descent,
    prune_adjacency,
    soft_threshold,
)
from dlingam.regress import multi_regress
from dlingam.simulate import frobenius_distance


def centered_problem(seed, k=3, n=500):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(k, n)) + 0.3 * rng.normal(size=n)
    X -= X.mean(axis=1, keepdims=True)
    y = rng.normal(size=k) @ X + rng.normal(size=n)
    return y - y.mean(), X


def test_soft_threshold():
    assert soft_threshold(3.0, 1.0) == 2.0
    assert soft_threshold(-3.0, 1.0) == -2.0
    assert soft_threshold(0.5, 1.0) == 0.0


def test_zero_penalty_is_ols():
    y, X = centered_problem(0)
    coef = lasso_coordinate_descent(y, X, np.ones(3), 0.0)
    np.testing.assert_allclose(coef, multi_regress(y, X), atol=1e-6)


def test_above_lambda_max_all_zero():
    y, X = centered_problem(1)
    w = np.array([0.5, 1.0, 2.0])
    lmax = lambda_max(y, X, w)
    for lam in (lmax, 2 * lmax):
        assert np.all(lasso_coordinate_descent(y, X, w, lam) == 0.0)
    assert np.any(lasso_coordinate_descent(y, X, w, 0.9 * lmax) != 0.0)


def test_single_normalized_regressor_closed_form():
    rng = np.random.default_rng(2)
    n = 400
    x = rng.normal(size=n)
    x = (x - x.mean()) / np.sqrt(np.mean((x - x.mean()) ** 2))
    y = 0.7 * x + rng.normal(size=n)
    lam, w = 0.3, 1.7
    coef = lasso_coordinate_descent(y, x[None, :], [w], lam)
    assert coef[0] == pytest.approx(soft_threshold(x @ y / n, lam * w / 2), abs=1e-12)


def test_non_convergence_reports_gap():
    y, X = centered_problem(3, k=4)
    X[1] = X[0] + 1e-3 * X[1]
    with pytest.raises(ConvergenceError) as info:
        lasso_coordinate_descent(y, X, np.ones(4), 1e-4, LassoConfig(max_iter=2))
    assert info.value.gap > 0


def test_bad_inputs():
    y, X = centered_problem(4)
    with pytest.raises(ValueError):
        lasso_coordinate_descent(y, X, [1.0, 0.0, 1.0], 0.1)
    with pytest.raises(ValueError):
        lasso_coordinate_descent(y, X, np.ones(2), 0.1)
    with pytest.raises(ValueError):
        lasso_coordinate_descent(y, X, np.ones(3), -1.0)
    with pytest.raises(ValueError):
        LassoConfig(folds=1)
    with pytest.raises(ValueError):
        LassoConfig(gamma_grid=())


def test_fold_assignment_balanced_and_seeded():
    a = fold_assignment(23, 5, np.random.default_rng(0))
    b = fold_assignment(23, 5, np.random.default_rng(0))
    np.testing.assert_array_equal(a, b)
    assert sorted(np.bincount(a)) == [4, 4, 5, 5, 5]


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.01, 0.99))
def test_kkt_conditions(seed, frac):
    y, X = centered_problem(seed, k=4, n=200)
    rng = np.random.default_rng(seed)
    w = rng.uniform(0.2, 3.0, 4)
    lam = frac * lambda_max(y, X, w)
    b = lasso_coordinate_descent(y, X, w, lam)
    grad = 2 * X @ (y - b @ X) / y.shape[0]
    active = b != 0
    np.testing.assert_allclose(grad[active], lam * w[active] * np.sign(b[active]), atol=1e-6)
    assert np.all(np.abs(grad[~active]) <= lam * w[~active] + 1e-6)


def test_oracle_property():
    hits = 0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(2, 2000))
        y = 2 * X[0] + rng.normal(0, np.sqrt(0.1), 2000)
        coef = adaptive_lasso(y, X, LassoConfig(seed=seed)).coef
        hits += coef[1] == 0 and abs(coef[0] - 2) <= 0.1
    assert hits >= 18


def test_null_selects_nothing():
    hits = 0
    for seed in range(20):
        rng = np.random.default_rng(1000 + seed)
        X = rng.normal(size=(5, 2000))
        y = rng.normal(size=2000)
        hits += np.all(adaptive_lasso(y, X, LassoConfig(seed=seed)).coef == 0)
    assert hits >= 18


def test_noiseless_signal():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(3, 300))
    fit = adaptive_lasso(X[0].copy(), X)
    assert fit.coef[0] != 0
    assert np.all(fit.coef[1:] == 0)


def test_refit_returns_ols_on_support():
    rng = np.random.default_rng(6)
    X = rng.normal(size=(3, 1000))
    y = 1.0 * X[0] - 0.5 * X[2] + rng.normal(size=1000)
    fit = adaptive_lasso(y, X)
    support = np.flatnonzero(fit.coef)
    Xc = X - X.mean(axis=1, keepdims=True)
    np.testing.assert_allclose(fit.coef[support], multi_regress(y - y.mean(), Xc[support]), atol=1e-10)
    shrunk = adaptive_lasso(y, X, LassoConfig(refit=False))
    np.testing.assert_array_equal(shrunk.coef != 0, fit.coef != 0)
    assert np.all(np.abs(shrunk.coef) <= np.abs(fit.coef) + 1e-12)


def test_no_regressors():
    fit = adaptive_lasso(np.arange(10.0), np.zeros((0, 10)))
    assert fit.coef.shape == (0,)


def test_prune_keeps_source_row_zero_and_triangularity():
    d = center(chain_data(2000, 0))
    pruned = prune_adjacency(d, estimate_b(d, CHAIN_ORDER))
    assert np.all(pruned.b[1] == 0)
    assert pruned.ordering == CHAIN_ORDER


def test_prune_not_worse_on_sparse_truth():
    b = CHAIN_B.copy()
    b[2, 0] = 0.0
    d = center(_data(b, 10000, 1))
    full = estimate_b(d, CHAIN_ORDER)
    pruned = prune_adjacency(d, full)
    assert pruned.b[2, 0] == 0.0
    assert frobenius_distance(b, pruned.b) <= frobenius_distance(b, full.b) + 0.05


def _data(b, n, seed):
    from dlingam.simulate import instance_from_b

    return instance_from_b(b, n, np.random.default_rng(seed))


def test_prune_failure_keeps_row():
    d = center(chain_data(300, 2))
    B = AdjacencyMatrix(CHAIN_B, CHAIN_ORDER)
    failures = []
    pruned = prune_adjacency(d, B, LassoConfig(max_iter=1), failures)
    for i, _ in failures:
        np.testing.assert_array_equal(pruned.b[i], CHAIN_B[i])
