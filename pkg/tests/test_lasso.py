import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tslasso import dgm, lasso
from oracles import lasso_fista, lasso_objective, ols, triple_product_fro


def kkt_ok(X, y, beta, lam, tol):
    T = X.shape[0]
    grad = 2.0 / T * X.T @ (y - X @ beta)
    nz = beta != 0
    return bool(np.all(np.abs(grad[nz] - lam * np.sign(beta[nz])) <= tol) and np.all(np.abs(grad[~nz]) <= lam + tol))


def test_full_shrinkage_at_lambda_max():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((40, 5))
    Y = rng.standard_normal((40, 2))
    lam = lasso.lambda_max(X, Y)
    res = lasso.fit_arrays(X, Y, lam)
    assert np.all(res.theta_hat.values == 0)
    assert res.sweeps_used == 0
    assert np.any(lasso.fit_arrays(X, Y, 0.99 * lam).theta_hat.values != 0)


def test_orthogonal_design_closed_form_and_grid():
    # X'X = T I with x_j'y / T = 1
    X = np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]])
    y = X @ np.array([1.0, 1.0])
    T = X.shape[0]
    np.testing.assert_allclose(X.T @ X, T * np.eye(2))
    res = lasso.fit_arrays(X, y, 0.4)
    np.testing.assert_allclose(res.theta_hat.values[:, 0], [0.8, 0.8], atol=1e-12)
    # dense grid over one coordinate with the other held at its optimum
    grid = np.linspace(0, 2, 200_001)
    obj = [lasso_objective(X, y, np.array([b, 0.8]), 0.4) for b in grid]
    assert grid[int(np.argmin(obj))] == pytest.approx(0.8, abs=1e-5)


def test_small_instance_matches_fista():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((50, 4))
    y = X @ np.array([1.0, 0.0, -0.5, 0.0]) + 0.3 * rng.standard_normal(50)
    res = lasso.fit_arrays(X, y, 0.1)
    ref = lasso_fista(X, y, 0.1)
    assert res.objective == pytest.approx(lasso_objective(X, y, ref, 0.1), abs=1e-6)
    assert res.converged and res.kkt_residual <= 1e-8


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 8), st.integers(1, 3), st.integers(2, 60), st.floats(0.01, 1.0))
def test_kkt_certificate_and_monotone_objective(seed, p, q, T, lam):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((T, p))
    Y = rng.standard_normal((T, q))
    res = lasso.fit_arrays(X, Y, lam)
    assert res.converged
    for k in range(q):
        assert kkt_ok(X, Y[:, k], res.theta_hat.values[:, k], lam, 1e-8)
        trace = np.array(res.objective_trace[k])
        assert np.all(np.diff(trace) <= 1e-12 * np.maximum(1.0, np.abs(trace[:-1])))


def test_lambda_zero_matches_normal_equations():
    rng = np.random.default_rng(2)
    X = rng.standard_normal((100, 6))
    Y = X @ rng.standard_normal((6, 2)) + rng.standard_normal((100, 2))
    res = lasso.fit_arrays(X, Y, 0.0, kkt_tol=1e-12)
    np.testing.assert_allclose(res.theta_hat.values, ols(X, Y), atol=1e-6)


def test_columns_are_separable_bitwise():
    rng = np.random.default_rng(3)
    X = rng.standard_normal((60, 7))
    Y = rng.standard_normal((60, 3))
    joint = lasso.fit_arrays(X, Y, 0.05).theta_hat.values
    for k in range(3):
        single = lasso.fit_arrays(X, Y[:, k], 0.05).theta_hat.values[:, 0]
        np.testing.assert_array_equal(joint[:, k], single)


def test_zero_column_pinned_with_warning():
    rng = np.random.default_rng(4)
    X = rng.standard_normal((30, 3))
    X[:, 1] = 0.0
    y = rng.standard_normal(30)
    with pytest.warns(UserWarning, match="pinned"):
        res = lasso.fit_arrays(X, y, 0.0, kkt_tol=1e-10)
    assert res.pinned == (1,)
    assert res.theta_hat.values[1, 0] == 0.0
    assert res.converged


def test_nonconvergence_warns():
    rng = np.random.default_rng(5)
    X = rng.standard_normal((30, 10))
    X[:, 1] = X[:, 0] + 1e-3 * rng.standard_normal(30)
    y = rng.standard_normal(30)
    with pytest.warns(UserWarning, match="stopped"):
        res = lasso.fit_arrays(X, y, 1e-4, max_sweeps=2)
    assert not res.converged
    assert res.sweeps_used == 2


def test_warm_start_converges_to_same_point():
    rng = np.random.default_rng(6)
    X = rng.standard_normal((80, 5))
    y = X @ np.array([1.0, 0.0, 0.0, 2.0, 0.0]) + rng.standard_normal(80)
    cold = lasso.fit_arrays(X, y, 0.1, kkt_tol=1e-12)
    warm = lasso.fit_arrays(X, y, 0.1, kkt_tol=1e-12, warm_start=cold.theta_hat.values)
    assert warm.sweeps_used == 0
    np.testing.assert_allclose(warm.theta_hat.values, cold.theta_hat.values)


def test_config_and_input_validation():
    with pytest.raises(ValueError):
        lasso.LassoConfig(-0.1)
    with pytest.raises(ValueError):
        lasso.LassoConfig(0.1, kkt_tol=0.0)
    with pytest.raises(ValueError):
        lasso.LassoConfig(0.1, max_sweeps=0)
    with pytest.raises(ValueError):
        lasso.fit_arrays(np.array([[np.nan, 1.0]]), np.array([1.0]), 0.1)
    with pytest.raises(ValueError):
        lasso.fit_arrays(np.ones((3, 2)), np.ones(4), 0.1)


def test_fit_on_sample_recovers_sparse_var():
    A = np.array([[0.5, 0.0, 0.0], [0.0, 0.0, 0.4], [0.3, 0.0, 0.0]])
    spec = dgm.GaussianVar((A,))
    sample = dgm.simulate(spec, 5000, rng=0)
    theta = dgm.population_theta(spec)
    res = lasso.fit(sample, lasso.LassoConfig(lasso.lambda_oracle(sample, theta)))
    err = lasso.errors(res, theta, sample)
    assert err.l2_vec_error < 0.1
    assert err.frobenius_error == err.l2_vec_error


def test_lambda_theory_examples():
    assert lasso.lambda_theory(1, 1, 50) == 0.0
    assert lasso.lambda_theory(10, 10, 100, 1.0) == pytest.approx(0.2146, abs=1e-4)
    assert lasso.lambda_theory(7, 3, 400, 2.0) == pytest.approx(lasso.lambda_theory(7, 3, 100, 2.0) / 2)
    with pytest.raises(ValueError):
        lasso.lambda_theory(0, 1, 10)


def test_lambda_oracle_examples():
    X = np.random.default_rng(0).standard_normal((20, 3))
    theta = np.array([[1.0], [0.0], [-2.0]])
    exact = dgm.TimeSeriesSample(X, X @ theta)
    assert lasso.lambda_oracle(exact, dgm.CoefficientMatrix(theta)) == 0.0
    one = dgm.TimeSeriesSample(np.array([[1.0]]), np.array([[0.5]]))
    assert lasso.lambda_oracle(one, dgm.CoefficientMatrix([[0.0]])) == 2.0
    with pytest.raises(ValueError):
        lasso.lambda_oracle(exact, dgm.CoefficientMatrix(np.zeros((2, 1))))


def test_lambda_oracle_decreases_with_T():
    A = np.array([[0.5, 0.1], [0.0, 0.3]])
    spec = dgm.GaussianVar((A,))
    theta = dgm.population_theta(spec)
    medians = []
    for T in (200, 2000, 20000):
        vals = [lasso.lambda_oracle(dgm.simulate(spec, T, rng=s), theta) for s in range(20)]
        assert min(vals) > 0
        medians.append(np.median(vals))
    assert medians[0] > medians[1] > medians[2]


def test_errors_examples():
    X = np.eye(3)
    sample = dgm.TimeSeriesSample(X * np.sqrt(3), np.zeros((3, 2)))
    theta = dgm.CoefficientMatrix(np.zeros((3, 2)))
    same = lasso.LassoFit(theta, 0, 0.0, 0.0, True, 0.1)
    rep = lasso.errors(same, theta, sample)
    assert rep.l2_vec_error == 0.0 and rep.in_sample_pred_error == 0.0
    bumped = np.zeros((3, 2))
    bumped[0, 0] = 1.0
    rep = lasso.errors(lasso.LassoFit(dgm.CoefficientMatrix(bumped), 0, 0.0, 0.0, True, 0.1), theta, sample)
    assert rep.in_sample_pred_error == pytest.approx(1.0)
    assert rep.l2_vec_error == 1.0


def test_pred_error_matches_triple_product():
    rng = np.random.default_rng(8)
    X = rng.standard_normal((30, 4))
    sample = dgm.TimeSeriesSample(X, rng.standard_normal((30, 3)))
    est = rng.standard_normal((4, 3))
    star = rng.standard_normal((4, 3))
    fit = lasso.LassoFit(dgm.CoefficientMatrix(est), 0, 0.0, 0.0, True, 0.1)
    rep = lasso.errors(fit, dgm.CoefficientMatrix(star), sample)
    want = triple_product_fro(est - star, X.T @ X / 30)
    assert rep.in_sample_pred_error == pytest.approx(want, rel=1e-12)


def test_objective_function():
    X = np.array([[1.0, 0.0], [0.0, 2.0]])
    Y = np.array([[1.0], [1.0]])
    B = np.array([[1.0], [0.5]])
    assert lasso.objective(X, Y, B, 0.2) == pytest.approx(0.0 + 0.2 * 1.5)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert lasso.fit_arrays(X, Y, 0.0, kkt_tol=1e-12).objective == pytest.approx(0.0, abs=1e-20)
