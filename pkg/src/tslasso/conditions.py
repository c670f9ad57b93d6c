"""Empirical RE / DB certificates, error-bound evaluation and concentration checks.

Universal constants that the theory leaves symbolic (Hanson-Wright ``c``,
Bernstein ``C1``/``C2``, the mixing constants) are always either supplied by
the caller or fitted from Monte-Carlo output; nothing here hard-codes them.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .dgm import CoefficientMatrix, DgmSpec, TimeSeriesSample, simulate
from .matops import as_matrix
from .tails import compose_gamma, estimate_subweibull_norm

__all__ = [
    "ReCertificate",
    "DbCertificate",
    "BoundReport",
    "GaussianCorollary",
    "SubweibullCorollary",
    "ConcentrationTable",
    "re_probes",
    "re_margins",
    "re_margin_direct",
    "check_re",
    "check_db",
    "master_bounds",
    "corollary_gaussian",
    "corollary_subweibull",
    "validate_hanson_wright",
    "validate_beta_bernstein",
]


@dataclass(frozen=True)
class ReCertificate:
    alpha: float
    tau: float
    n_probes: int
    min_margin: float
    falsified_by: np.ndarray | None = None

    @property
    def passed(self) -> bool:
        return self.min_margin >= 0.0


@dataclass(frozen=True)
class DbCertificate:
    lhs: float
    bound: float

    @property
    def passed(self) -> bool:
        return self.lhs <= self.bound


@dataclass(frozen=True)
class BoundReport:
    l2_bound: float
    pred_bound: float  # bounds the squared prediction error
    premise_ok: bool
    lambda_ok: bool | None = None


def _unit_rows(v):
    nrm = np.linalg.norm(v, axis=1, keepdims=True)
    nrm[nrm == 0.0] = 1.0
    return v / nrm


def re_probes(p: int, n_probes: int, rng: np.random.Generator, s_hint: int | None = None, theta_star=None, gram=None):
    """Probe directions for RE falsification, one per row.

    In order: the ``p`` standard basis vectors; ``n_probes`` random sparse
    unit vectors with sparsity uniform on ``{1..min(2 s_hint, p)}``;
    ``n_probes`` dense Gaussian unit vectors; ``n_probes`` random sign
    patterns on column supports of ``theta_star`` (when given); and the
    bottom eigenvector of ``gram`` (when given).
    """
    if s_hint is None:
        s_hint = max(1, int(math.isqrt(p)))
    blocks = [np.eye(p)]

    kmax = max(1, min(2 * s_hint, p))
    sparse = np.zeros((n_probes, p))
    for i in range(n_probes):
        k = rng.integers(1, kmax + 1)
        idx = rng.choice(p, size=k, replace=False)
        sparse[i, idx] = rng.standard_normal(k)
    blocks.append(_unit_rows(sparse))

    blocks.append(_unit_rows(rng.standard_normal((n_probes, p))))

    if theta_star is not None:
        theta = theta_star.values if isinstance(theta_star, CoefficientMatrix) else as_matrix(theta_star)
        supports = [np.flatnonzero(theta[:, k]) for k in range(theta.shape[1])]
        supports = [s for s in supports if s.size]
        if supports:
            flips = np.zeros((n_probes, p))
            for i in range(n_probes):
                idx = supports[rng.integers(len(supports))]
                flips[i, idx] = rng.choice([-1.0, 1.0], size=idx.size)
            blocks.append(_unit_rows(flips))

    if gram is not None:
        _, vecs = np.linalg.eigh(gram)
        blocks.append(vecs[:, :1].T)
    return np.vstack(blocks)


def re_margins(gram, probes, alpha: float, tau: float) -> np.ndarray:
    """``v' G v - alpha ||v||_2^2 + tau ||v||_1^2`` for each probe row ``v``."""
    quad = np.einsum("ij,jk,ik->i", probes, gram, probes)
    return quad - alpha * np.sum(probes**2, axis=1) + tau * np.sum(np.abs(probes), axis=1) ** 2


def re_margin_direct(X, v, alpha: float, tau: float) -> float:
    """Same margin evaluated as ``(1/T)||X v||^2 - alpha ||v||^2 + tau ||v||_1^2``."""
    X = np.asarray(X, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    xv = X @ v
    return float(xv @ xv / X.shape[0] - alpha * (v @ v) + tau * np.abs(v).sum() ** 2)


def check_re(
    sample: TimeSeriesSample,
    alpha: float,
    tau: float,
    n_probes: int = 200,
    rng=0,
    theta_star=None,
    s_hint: int | None = None,
) -> ReCertificate:
    """Try to falsify the lower RE(alpha, tau) condition for ``X'X/T``.

    This is one-sided: a pass means no probe violated the inequality, not
    that it holds for every direction.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    if n_probes < 1:
        raise ValueError("n_probes must be >= 1")
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    gram = sample.X.T @ sample.X / sample.n_obs
    if s_hint is None and theta_star is not None:
        theta = theta_star.values if isinstance(theta_star, CoefficientMatrix) else as_matrix(theta_star)
        s_hint = max(1, int(np.count_nonzero(theta, axis=0).max()))
    probes = re_probes(sample.p, n_probes, gen, s_hint=s_hint, theta_star=theta_star, gram=gram)
    margins = re_margins(gram, probes, alpha, tau)
    worst = int(np.argmin(margins))
    min_margin = float(margins[worst])
    return ReCertificate(
        alpha=float(alpha),
        tau=float(tau),
        n_probes=int(probes.shape[0]),
        min_margin=min_margin,
        falsified_by=probes[worst].copy() if min_margin < 0 else None,
    )


def check_db(
    sample: TimeSeriesSample,
    theta_star,
    q_mult: float,
    rate_mode: str = "subweibull",
    s_alpha: float = 1.0,
) -> DbCertificate:
    """Compare ``(1/T)||X'W||_inf`` against ``q_mult * rate``.

    ``rate = sqrt(log(pq)/T)``, multiplied by the mixing-sum proxy ``s_alpha``
    in ``gaussian`` mode.
    """
    if q_mult < 0:
        raise ValueError("q_mult must be nonnegative")
    if rate_mode not in ("gaussian", "subweibull"):
        raise ValueError("rate_mode must be 'gaussian' or 'subweibull'")
    theta = theta_star.values if isinstance(theta_star, CoefficientMatrix) else as_matrix(theta_star)
    if theta.shape != (sample.p, sample.q):
        raise ValueError(f"theta_star shape {theta.shape} != {(sample.p, sample.q)}")
    W = sample.Y - sample.X @ theta
    lhs = float(np.abs(sample.X.T @ W).max() / sample.n_obs)
    rate = math.sqrt(math.log(sample.p * sample.q) / sample.n_obs)
    if rate_mode == "gaussian":
        rate *= s_alpha
    return DbCertificate(lhs=lhs, bound=float(q_mult * rate))


def master_bounds(s: int, lam: float, alpha: float, tau: float, lambda_floor: float | None = None) -> BoundReport:
    """Estimation and prediction error bounds given RE(alpha, tau) and lambda.

    ``pred_bound`` bounds the squared Frobenius norm of
    ``(B - B*)' G (B - B*)``. ``lambda_floor`` is the ``4 Q R`` level the
    tuning parameter must exceed, when known.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    return BoundReport(
        l2_bound=4.0 * math.sqrt(s) * lam / alpha,
        pred_bound=32.0 * lam**2 * s / alpha,
        premise_ok=bool(alpha >= 32.0 * s * tau),
        lambda_ok=None if lambda_floor is None else bool(lam >= lambda_floor),
    )


@dataclass(frozen=True)
class GaussianCorollary:
    Q: float
    R: float
    lambda_T: float
    alpha: float | None
    eta: float | None
    threshold: float | None
    t_ok: bool | None


def corollary_gaussian(
    sigma_x_op: float,
    sigma_y_op: float,
    max_col_theta_sq: float,
    s_alpha_T: float,
    b_param: float,
    c_tilde: float,
    p: int,
    q: int,
    T: int,
    lambda_min_x: float | None = None,
    lambda_max_x: float | None = None,
    s: int | None = None,
    c_re: float | None = None,
) -> GaussianCorollary:
    """Multiplier, rate and tuning level for Gaussian alpha-mixing data.

    The sample-size threshold needs ``lambda_min_x``, ``lambda_max_x``, ``s``
    and the RE constant ``c_re``; when any is missing it is reported as None.
    """
    if min(sigma_x_op, sigma_y_op, s_alpha_T, c_tilde) <= 0 or b_param <= 0:
        raise ValueError("scale inputs must be positive")
    lead = 8.0 * math.pi * math.sqrt((b_param + 1.0) / c_tilde)
    Q = lead * (sigma_x_op * (1.0 + max_col_theta_sq) + sigma_y_op)
    R = s_alpha_T * math.sqrt(math.log(p * q) / T)
    alpha = None if lambda_min_x is None else 0.5 * lambda_min_x
    eta = threshold = t_ok = None
    if None not in (lambda_min_x, lambda_max_x, s, c_re):
        eta = lambda_min_x / (108.0 * math.pi * s_alpha_T * lambda_max_x)
        re_part = math.log(p) / (c_re * min(1.0, eta**2)) * max(42.0 * math.e, 128.0 * s)
        db_part = math.log(p * q) * math.sqrt((b_param + 1.0) / c_tilde)
        threshold = max(re_part, db_part)
        t_ok = bool(T >= threshold)
    return GaussianCorollary(Q=Q, R=R, lambda_T=4.0 * Q * R, alpha=alpha, eta=eta, threshold=threshold, t_ok=t_ok)


@dataclass(frozen=True)
class SubweibullCorollary:
    K: float
    gamma: float
    lambda_T: float
    alpha: float | None
    tau: float | None
    c_tilde: float | None
    thresholds: tuple
    thresholds_ok: tuple
    c_mix: float | None = None


def corollary_subweibull(
    k_x: float,
    k_y: float,
    theta_op: float,
    gamma1: float,
    gamma2: float,
    c_mix: float | None,
    C1: float,
    C2: float,
    p: int,
    q: int,
    T: int,
    s: int | None = None,
    lambda_min_x: float | None = None,
) -> SubweibullCorollary:
    """Constants of the beta-mixing subweibull guarantee.

    ``c_mix`` is the mixing-decay constant that ``C1``/``C2`` implicitly
    depend on; it is carried for provenance only. Sample-size thresholds are
    the three terms of the required maximum; the second and third need ``s``
    and ``lambda_min_x`` and are None without them.
    """
    if min(k_y, gamma1, gamma2, C1, C2) <= 0 or k_x < 0 or theta_op < 0:
        raise ValueError("inputs must be positive")
    gamma = compose_gamma(gamma1, gamma2).gamma
    if gamma >= 1.0:
        warnings.warn(f"composed gamma = {gamma:.4g} >= 1; the guarantee assumes gamma < 1", stacklevel=2)
    K = 2.0 ** (2.0 / gamma2) * (k_y + k_x * (1.0 + theta_op)) ** 2
    lam = 4.0 * C2 * K * math.sqrt(math.log(p * q) / T)
    t1 = C1 * math.log(p * q) ** (2.0 / gamma - 1.0)
    t2 = t3 = alpha = tau = c_tilde = None
    if lambda_min_x is not None and s is not None and gamma < 1.0:
        c_tilde = lambda_min_x**gamma / ((54.0 * K) ** gamma * 2.0 * C1)
        t2 = 54.0 * K * (2.0 * max(8.0 * s / c_tilde, C1) * math.log(p)) ** (1.0 / gamma) / lambda_min_x
        t3 = (54.0 * K / lambda_min_x) ** ((2.0 - gamma) / (1.0 - gamma)) * (C2 / C1) ** (1.0 / (1.0 - gamma))
        alpha = 0.5 * lambda_min_x
        tau = alpha / (2.0 * c_tilde) * math.log(p) / T**gamma
    thresholds = (t1, t2, t3)
    ok = tuple(None if t is None else bool(T >= t) for t in thresholds)
    return SubweibullCorollary(
        K=K, gamma=gamma, lambda_T=lam, alpha=alpha, tau=tau, c_tilde=c_tilde,
        thresholds=thresholds, thresholds_ok=ok, c_mix=c_mix,
    )


@dataclass(frozen=True)
class ConcentrationTable:
    """Monte-Carlo exceedance frequencies against a fitted bound curve."""

    t: np.ndarray
    exceedance: np.ndarray
    bound: np.ndarray
    constants: dict
    n_mc: int

    @property
    def slack(self) -> np.ndarray:
        return self.bound - self.exceedance

    @property
    def dominated(self) -> bool:
        return bool(np.all(self.bound >= self.exceedance))

    def rows(self):
        for t, e, b in zip(self.t, self.exceedance, self.bound):
            yield {"t": float(t), "exceedance": float(e), "bound": float(b), "slack": float(b - e)}


def _psd_eigenvalues(q_cov):
    q_cov = as_matrix(q_cov, "q_cov")
    if q_cov.shape[0] != q_cov.shape[1] or not np.allclose(q_cov, q_cov.T, atol=1e-12):
        raise ValueError("q_cov must be square and symmetric")
    eig = np.linalg.eigvalsh(q_cov)
    if eig.min() < -1e-10 * max(1.0, abs(eig.max())):
        raise ValueError("q_cov is not positive semidefinite")
    return np.clip(eig, 0.0, None)


def validate_hanson_wright(
    n: int,
    q_cov,
    t_grid,
    n_mc: int = 100_000,
    rng=0,
    c_step: float = 0.01,
    c_max: float = 10.0,
    chunk: int = 10_000,
) -> ConcentrationTable:
    """Exceedance of ``(1/n)| ||Y||^2 - E||Y||^2 | > eta |||Q|||`` for ``Y ~ N(0, Q)``.

    ``||Y||^2`` is drawn as ``sum_i lambda_i z_i^2`` over the eigenvalues of
    ``Q``, which has the same law. The constant ``c`` of
    ``2 exp(-c n min(eta, eta^2))`` is fitted as the largest multiple of
    ``c_step`` (capped at ``c_max``) keeping the bound above every observed
    frequency; 0 means no grid value works.
    """
    eig = _psd_eigenvalues(q_cov)
    if eig.size != n:
        raise ValueError(f"q_cov must be {n}x{n}")
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    etas = np.asarray(t_grid, dtype=np.float64)
    op = eig.max()
    mean = eig.sum()
    counts = np.zeros(etas.size, dtype=np.int64)
    done = 0
    while done < n_mc:
        m = min(chunk, n_mc - done)
        z = gen.standard_normal((m, n))
        dev = np.abs((z**2) @ eig - mean) / n
        counts += np.sum(dev[:, None] > etas[None, :] * op, axis=0)
        done += m
    freq = counts / n_mc

    rate = n * np.minimum(etas, etas**2)
    grid = c_step * np.arange(1, int(round(c_max / c_step)) + 1)
    ok = np.all(2.0 * np.exp(-grid[:, None] * rate[None, :]) >= freq[None, :], axis=1)
    c_hat = float(grid[ok].max()) if ok.any() else 0.0
    return ConcentrationTable(
        t=etas,
        exceedance=freq,
        bound=2.0 * np.exp(-c_hat * rate),
        constants={"c": c_hat},
        n_mc=int(n_mc),
    )


def _bernstein_bound(t, T, K, gamma, C1, C2):
    return T * np.exp(-((t * T) ** gamma) / (K**gamma * C1)) + np.exp(-(t**2) * T / (K**2 * C2))


def validate_beta_bernstein(
    spec: DgmSpec,
    T: int,
    t_grid,
    n_mc: int = 2000,
    gamma1: float = 1.0,
    gamma2: float = 2.0,
    K: float | None = None,
    rng=0,
    projection=None,
    burn_in: int = 200,
    c_grid=None,
) -> ConcentrationTable:
    """Exceedance of ``|S_T / T| > t`` for the scalar series ``v' X_t``.

    ``S_T`` sums ``T`` consecutive projected regressors from ``spec``
    (zero mean by construction). The two-term bound uses
    ``1/gamma = 1/gamma1 + 1/gamma2`` and subweibull constant ``K``
    (estimated from the pooled projections when None). ``(C1, C2)`` are
    chosen from a log-spaced grid as the dominating pair with the smallest
    total slack.
    """
    T = int(T)
    if T <= 4:
        raise ValueError("T must exceed 4")
    ts = np.asarray(t_grid, dtype=np.float64)
    if np.any(ts <= 1.0 / T):
        raise ValueError("every t must exceed 1/T")
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)

    means = np.empty(n_mc)
    pooled = []
    for i in range(n_mc):
        sample = simulate(spec, T, burn_in=burn_in, rng=gen)
        v = np.zeros(sample.p) if projection is None else np.asarray(projection, dtype=np.float64)
        if projection is None:
            v[0] = 1.0
        series = sample.X @ v
        means[i] = series.mean()
        if i < 50:
            pooled.append(series)
    freq = np.mean(np.abs(means)[:, None] > ts[None, :], axis=0)

    gamma = compose_gamma(gamma1, gamma2).gamma_pair
    if K is None:
        K = estimate_subweibull_norm(np.concatenate(pooled), gamma2)

    grid = np.logspace(-4, 8, 121) if c_grid is None else np.asarray(c_grid, dtype=np.float64)
    best = None
    for c1 in grid:
        bounds = _bernstein_bound(ts[None, :], T, K, gamma, c1, grid[:, None])
        ok = np.all(bounds >= freq[None, :], axis=1)
        if not ok.any():
            continue
        slack = np.where(ok, np.sum(bounds - freq[None, :], axis=1), np.inf)
        j = int(np.argmin(slack))
        if best is None or slack[j] < best[0]:
            best = (float(slack[j]), float(c1), float(grid[j]))
    if best is None:
        raise RuntimeError("no (C1, C2) pair on the grid dominates the exceedance frequencies")
    _, c1, c2 = best
    return ConcentrationTable(
        t=ts,
        exceedance=freq,
        bound=_bernstein_bound(ts, T, K, gamma, c1, c2),
        constants={"C1": c1, "C2": c2, "K": float(K), "gamma": gamma},
        n_mc=int(n_mc),
    )
