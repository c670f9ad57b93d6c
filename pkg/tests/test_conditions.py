import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tslasso import conditions, dgm, lasso, matops


def identity_sample(p, T=None):
    T = p if T is None else T
    X = np.zeros((T, p))
    X[:p] = np.eye(p) * math.sqrt(T)
    return dgm.TimeSeriesSample(X, np.zeros((T, 1)))


def var1_setup(p, s, seed):
    A = dgm.generate_sparse_stable(p, s, 0.5, np.random.default_rng(seed))
    spec = dgm.GaussianVar((A.values,))
    sigma = matops.solve_discrete_lyapunov(A.values, np.eye(p))
    return spec, dgm.population_theta(spec), np.linalg.eigvalsh(sigma).min()


def test_re_identity_gram_passes():
    cert = conditions.check_re(identity_sample(6), 0.5, 0.0, n_probes=50)
    assert cert.passed
    assert cert.min_margin == pytest.approx(0.5, abs=1e-12)
    assert cert.falsified_by is None


def test_re_zero_gram_fails():
    sample = dgm.TimeSeriesSample(np.zeros((10, 4)), np.zeros((10, 1)))
    cert = conditions.check_re(sample, 0.5, 0.0, n_probes=20)
    assert not cert.passed
    assert cert.min_margin == pytest.approx(-0.5)
    assert np.linalg.norm(cert.falsified_by) == pytest.approx(1.0)


def test_re_probe_composition():
    rng = np.random.default_rng(0)
    theta = np.zeros((5, 2))
    theta[[0, 3], 0] = 1.0
    probes = conditions.re_probes(5, 7, rng, s_hint=1, theta_star=theta, gram=np.eye(5))
    assert probes.shape == (5 + 7 + 7 + 7 + 1, 5)
    np.testing.assert_array_equal(probes[:5], np.eye(5))
    assert np.all(np.count_nonzero(probes[5:12], axis=1) <= 2)
    flips = probes[19:26]
    assert np.all(np.count_nonzero(flips, axis=1) == 2)
    assert np.all(flips[:, [1, 2, 4]] == 0)
    np.testing.assert_allclose(np.linalg.norm(probes, axis=1), 1.0)


def test_re_validation():
    sample = identity_sample(3)
    with pytest.raises(ValueError):
        conditions.check_re(sample, 0.0, 0.0)
    with pytest.raises(ValueError):
        conditions.check_re(sample, 0.5, -1.0)
    with pytest.raises(ValueError):
        conditions.check_re(sample, 0.5, 0.0, n_probes=0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 10), st.integers(2, 40), st.floats(0.01, 2.0), st.floats(0.0, 0.5))
def test_re_margin_two_paths_agree(seed, p, T, alpha, tau):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((T, p))
    probes = conditions.re_probes(p, 5, rng)
    quad = conditions.re_margins(X.T @ X / T, probes, alpha, tau)
    for v, m in zip(probes, quad):
        direct = conditions.re_margin_direct(X, v, alpha, tau)
        assert m == pytest.approx(direct, rel=1e-10, abs=1e-12)


def test_re_gaussian_var_passes_on_most_seeds():
    p, T = 20, 4000
    passed = 0
    for seed in range(100):
        spec, theta, lmin = var1_setup(p, 5, seed)
        alpha = 0.5 * lmin
        tau = alpha * math.log(p) / math.sqrt(T)
        sample = dgm.simulate(spec, T, rng=seed)
        passed += conditions.check_re(sample, alpha, tau, n_probes=100, rng=seed, theta_star=theta).passed
    assert passed >= 95


def test_db_zero_noise_passes():
    X = np.random.default_rng(0).standard_normal((30, 3))
    theta = np.array([[0.5, 0.0], [0.0, 0.2], [0.1, 0.0]])
    cert = conditions.check_db(dgm.TimeSeriesSample(X, X @ theta), theta, q_mult=0.0)
    assert cert.lhs == 0.0 and cert.passed


def test_db_zero_multiplier_fails_on_noise():
    spec, theta, _ = var1_setup(4, 3, 0)
    sample = dgm.simulate(spec, 200, rng=0)
    assert not conditions.check_db(sample, theta, q_mult=0.0).passed


def test_db_rate_modes_and_errors():
    spec, theta, _ = var1_setup(4, 3, 0)
    sample = dgm.simulate(spec, 200, rng=0)
    sub = conditions.check_db(sample, theta, 1.0)
    gau = conditions.check_db(sample, theta, 1.0, rate_mode="gaussian", s_alpha=3.0)
    assert sub.bound == pytest.approx(math.sqrt(math.log(16) / 200))
    assert gau.bound == pytest.approx(3.0 * sub.bound)
    with pytest.raises(ValueError):
        conditions.check_db(sample, theta, -1.0)
    with pytest.raises(ValueError):
        conditions.check_db(sample, theta, 1.0, rate_mode="other")
    with pytest.raises(ValueError):
        conditions.check_db(sample, np.zeros((3, 4)), 1.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_db_row_permutation_invariant(seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((25, 4))
    Y = rng.standard_normal((25, 2))
    theta = rng.standard_normal((4, 2))
    perm = rng.permutation(25)
    a = conditions.check_db(dgm.TimeSeriesSample(X, Y), theta, 1.0).lhs
    b = conditions.check_db(dgm.TimeSeriesSample(X[perm], Y[perm]), theta, 1.0).lhs
    assert a == pytest.approx(b, rel=1e-12)


def test_db_calibrate_then_extrapolate():
    p = 20
    spec, theta, _ = var1_setup(p, 5, 0)
    # calibrate once at T = 500 on held-out seeds
    ratios = []
    for seed in range(1000, 1100):
        cert = conditions.check_db(dgm.simulate(spec, 500, rng=seed), theta, 1.0)
        ratios.append(cert.lhs / cert.bound)
    q_mult = float(np.quantile(ratios, 0.95))
    for T in (2000, 8000):
        passed = sum(conditions.check_db(dgm.simulate(spec, T, rng=s), theta, q_mult).passed for s in range(100))
        assert passed >= 90, (T, passed)


def test_master_bounds_examples():
    rep = conditions.master_bounds(1, 0.2, 0.8, 0.0)
    assert rep.l2_bound == pytest.approx(1.0)
    assert rep.pred_bound == pytest.approx(1.6)
    assert rep.premise_ok
    assert rep.lambda_ok is None
    assert not conditions.master_bounds(3, 0.2, 0.8, 0.8 / 48).premise_ok
    assert conditions.master_bounds(4, 0.1, 0.8, 0.0).l2_bound == pytest.approx(1.0)
    assert conditions.master_bounds(1, 0.2, 0.8, 0.0, lambda_floor=0.3).lambda_ok is False
    with pytest.raises(ValueError):
        conditions.master_bounds(1, 0.2, 0.0, 0.0)


@given(st.integers(1, 50), st.floats(1e-3, 10), st.floats(1e-3, 10), st.sampled_from([0.5, 2.0, 4.0]))
def test_master_bounds_homogeneous(s, lam, alpha, k):
    a = conditions.master_bounds(s, lam, alpha, 0.0)
    b = conditions.master_bounds(s, k * lam, alpha, 0.0)
    assert b.l2_bound == k * a.l2_bound
    assert b.pred_bound == k * k * a.pred_bound


def test_l2_bound_holds_where_certified():
    # tau = 0 keeps the curvature premise satisfiable
    p, s, T = 20, 5, 4000
    checked = 0
    for seed in range(100):
        spec, theta, lmin = var1_setup(p, s, seed)
        alpha = 0.5 * lmin
        sample = dgm.simulate(spec, T, rng=seed)
        cert = conditions.check_re(sample, alpha, 0.0, n_probes=50, rng=seed, theta_star=theta)
        lam = lasso.lambda_oracle(sample, theta)
        rep = conditions.master_bounds(theta.sparsity, lam, alpha, 0.0)
        if not (cert.passed and rep.premise_ok):
            continue
        checked += 1
        err = lasso.errors(lasso.fit(sample, lasso.LassoConfig(lam)), theta, sample)
        assert err.l2_vec_error <= rep.l2_bound
    assert checked >= 90


def test_corollary_gaussian_examples():
    # 8 pi sqrt((b + 1) / c) = 1 with b = 1
    c_tilde = 128 * math.pi**2
    base = conditions.corollary_gaussian(1.0, 1.0, 0.0, 1.0, 1.0, c_tilde, 10, 10, 100)
    assert base.Q == pytest.approx(2.0)
    assert base.R == pytest.approx(math.sqrt(math.log(100) / 100))
    assert base.lambda_T == pytest.approx(4 * base.Q * base.R)
    assert base.alpha is None and base.t_ok is None
    doubled = conditions.corollary_gaussian(1.0, 1.0, 0.0, 2.0, 1.0, c_tilde, 10, 10, 100)
    assert doubled.R == pytest.approx(2 * base.R)
    assert doubled.lambda_T == pytest.approx(2 * base.lambda_T)
    longer = conditions.corollary_gaussian(1.0, 1.0, 0.0, 1.0, 1.0, c_tilde, 10, 10, 400)
    assert longer.R == pytest.approx(base.R / 2)
    full = conditions.corollary_gaussian(1.0, 1.0, 0.0, 1.0, 1.0, c_tilde, 10, 10, 100, 0.8, 2.0, 3, 1.0)
    assert full.alpha == pytest.approx(0.4)
    assert full.threshold > 0 and full.t_ok is (100 >= full.threshold)
    with pytest.raises(ValueError):
        conditions.corollary_gaussian(0.0, 1.0, 0.0, 1.0, 1.0, 1.0, 10, 10, 100)


def test_corollary_subweibull_examples():
    res = conditions.corollary_subweibull(1.0, 1.0, 0.0, 1.0, 2.0, None, 1.0, 1.0, 10, 10, 100)
    assert res.K == pytest.approx(8.0)
    assert res.gamma == pytest.approx(0.5)
    assert res.lambda_T == pytest.approx(4 * 8.0 * math.sqrt(math.log(100) / 100))
    assert res.thresholds[1] is None and res.thresholds_ok[0] is (100 >= res.thresholds[0])
    for g2 in (1.0, 2.0, 3.0):
        deg = conditions.corollary_subweibull(0.0, 1.5, 0.0, 1.0, g2, 0.3, 1.0, 1.0, 10, 10, 100)
        assert deg.K == pytest.approx(2 ** (2 / g2) * 1.5**2)
        assert deg.c_mix == 0.3
    full = conditions.corollary_subweibull(1.0, 1.0, 0.5, 1.0, 2.0, None, 1.0, 1.0, 10, 10, 100, s=3, lambda_min_x=0.5)
    assert all(t is not None for t in full.thresholds)
    assert full.alpha == pytest.approx(0.25)
    with pytest.warns(UserWarning, match="gamma"):
        conditions.corollary_subweibull(1.0, 1.0, 0.0, 1e9, 1e9, None, 1.0, 1.0, 10, 10, 100)
    with pytest.raises(ValueError):
        conditions.corollary_subweibull(1.0, 0.0, 0.0, 1.0, 2.0, None, 1.0, 1.0, 10, 10, 100)


def test_hanson_wright_far_tail_is_zero():
    table = conditions.validate_hanson_wright(10, np.eye(10), [5.0, 8.0], n_mc=20_000, rng=0)
    np.testing.assert_array_equal(table.exceedance, 0.0)
    assert table.dominated


def test_hanson_wright_identity_100():
    table = conditions.validate_hanson_wright(100, np.eye(100), [0.3], n_mc=100_000, rng=1)
    assert table.constants["c"] >= 0.1
    assert table.exceedance[0] <= 2 * math.exp(-0.1 * 100 * 0.09)
    assert table.dominated
    row = next(table.rows())
    assert row["slack"] == pytest.approx(row["bound"] - row["exceedance"])


def test_hanson_wright_scale_invariant():
    q = np.diag(np.linspace(0.5, 2.0, 20))
    etas = [0.1, 0.3, 0.6]
    a = conditions.validate_hanson_wright(20, q, etas, n_mc=20_000, rng=2)
    b = conditions.validate_hanson_wright(20, 4.0 * q, etas, n_mc=20_000, rng=2)
    np.testing.assert_array_equal(a.exceedance, b.exceedance)


def test_hanson_wright_errors():
    with pytest.raises(ValueError, match="semidefinite"):
        conditions.validate_hanson_wright(2, np.diag([1.0, -1.0]), [0.5], n_mc=10)
    with pytest.raises(ValueError):
        conditions.validate_hanson_wright(3, np.eye(2), [0.5], n_mc=10)


def test_bernstein_far_tail_and_errors():
    spec = dgm.GaussianVar(([[0.5]],))
    table = conditions.validate_beta_bernstein(spec, 200, [5.0], n_mc=100, rng=0)
    assert table.exceedance[0] == 0.0
    with pytest.raises(ValueError):
        conditions.validate_beta_bernstein(spec, 200, [0.001], n_mc=10)
    with pytest.raises(ValueError):
        conditions.validate_beta_bernstein(spec, 4, [0.5], n_mc=10)


def test_bernstein_ar1_dominated():
    spec = dgm.GaussianVar(([[0.5]],))
    table = conditions.validate_beta_bernstein(spec, 2000, [0.02, 0.04, 0.06, 0.08, 0.1], n_mc=500, rng=3)
    assert table.dominated
    assert all(math.isfinite(table.constants[k]) for k in ("C1", "C2", "K"))
    assert table.constants["gamma"] == pytest.approx(2 / 3)


def test_bernstein_iid_clt_tail():
    # white noise: S_T/T ~ N(0, 1/T), so |S_T/T| > 3/sqrt(T) is rare
    T = 400
    spec = dgm.GaussianVar((np.zeros((1, 1)),))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        table = conditions.validate_beta_bernstein(spec, T, [3 / math.sqrt(T)], n_mc=2000, rng=4)
    assert table.exceedance[0] < 0.01
    assert table.dominated
