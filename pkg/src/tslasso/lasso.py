"""Multi-response lasso by cyclic coordinate descent.

The objective is ``(1/T) ||vec(Y - X B)||_2^2 + lam ||vec(B)||_1``. Note the
1/T (not 1/(2T)) scaling: the coordinate update is
``b_j <- S((2/T) x_j' r_{+j}, lam) / ((2/T) ||x_j||^2)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .dgm import CoefficientMatrix, TimeSeriesSample
from .matops import as_matrix

__all__ = [
    "LassoConfig",
    "LassoFit",
    "ErrorReport",
    "fit",
    "fit_arrays",
    "lambda_theory",
    "lambda_oracle",
    "lambda_max",
    "errors",
    "objective",
]


@dataclass(frozen=True)
class LassoConfig:
    lam: float
    max_sweeps: int = 10_000
    kkt_tol: float = 1e-8
    warm_start: CoefficientMatrix | None = None

    def __post_init__(self):
        if not (self.lam >= 0 and math.isfinite(self.lam)):
            raise ValueError(f"lambda must be finite and >= 0, got {self.lam}")
        if not self.kkt_tol > 0:
            raise ValueError("kkt_tol must be positive")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be >= 1")


@dataclass(frozen=True)
class LassoFit:
    theta_hat: CoefficientMatrix
    sweeps_used: int
    kkt_residual: float
    objective: float
    converged: bool
    lam: float
    pinned: tuple = ()
    objective_trace: tuple = ()


@dataclass(frozen=True)
class ErrorReport:
    l2_vec_error: float
    in_sample_pred_error: float

    @property
    def frobenius_error(self) -> float:
        return self.l2_vec_error


def objective(X, Y, B, lam: float) -> float:
    X = np.asarray(X, dtype=np.float64)
    resid = np.asarray(Y, dtype=np.float64) - X @ np.asarray(B, dtype=np.float64)
    return float(np.sum(resid**2) / X.shape[0] + lam * np.abs(B).sum())


_CHUNK = 100


def _solve_column(gram, xty, yty, n_obs, lam, beta, max_sweeps, kkt_tol):
    """Coordinate descent in chunks, with an active-set step between chunks.

    Cyclic descent crawls when the support columns are (nearly) dependent, as
    when T < p. After each unconverged chunk, ``_active_set_step`` jumps to the
    minimiser on the current sign pattern; it is kept only if the objective
    does not rise, so the trace stays monotone.
    """
    done = 0
    trace = []
    while True:
        budget = min(_CHUNK, max_sweeps - done) if done else min(_CHUNK, max_sweeps)
        buf = np.full(budget + 1, np.nan)
        sweeps, kkt = kernels.cd_column(gram, xty, yty, n_obs, lam, beta, budget, kkt_tol, buf)
        trace.extend(float(v) for v in buf[: sweeps + 1])
        done += int(sweeps)
        if kkt <= kkt_tol or done >= max_sweeps:
            return done, float(kkt), tuple(trace)
        cand = _active_set_step(gram, xty, beta, lam, n_obs)
        if _column_objective(gram, xty, yty, cand, lam, n_obs) <= trace[-1]:
            beta[:] = cand


def _column_objective(gram, xty, yty, b, lam, n_obs):
    return float((yty - 2.0 * b @ xty + b @ gram @ b) / n_obs + lam * np.abs(b).sum())


def _active_set_step(gram, xty, beta, lam, n_obs, max_iter=None):
    """Minimise the objective over the orthant of ``beta``'s sign pattern.

    On the support ``S`` with signs ``s`` the objective is the quadratic
    ``(b'Gb - 2b'c)/T + lam s'b``. Each pass moves towards its minimiser
    (least-norm when ``G_SS`` is singular) and then along null directions of
    ``G_SS``, which lower the l1 term at no cost in fit; either move stops at
    the first coordinate that reaches zero, which then leaves the support.
    """
    b = beta.copy()
    half = 0.5 * lam * n_obs
    for _ in range(max_iter or 2 * b.size + 2):
        S = np.flatnonzero(b)
        if S.size == 0:
            break
        s = np.sign(b[S])
        G = gram[np.ix_(S, S)]
        rhs = xty[S] - half * s
        u, sv, vt = np.linalg.svd(G)
        keep = sv > 1e-12 * max(sv[0], 1e-300)
        target = vt[keep].T @ ((u[:, keep].T @ rhs) / sv[keep])
        moved, hit = _move_until_zero(b, S, target - b[S], 1.0)
        if hit:
            continue
        # null directions: G d = 0, so only the l1 term changes
        null = vt[~keep]
        d = -(null.T @ (null @ s)) if null.size else np.zeros(S.size)
        if np.abs(d).max(initial=0.0) <= 1e-12:
            break
        _, hit = _move_until_zero(b, S, d, np.inf)
        if not hit:
            break
    return b


def _move_until_zero(b, S, step, t_max):
    """``b[S] += t step`` for the largest ``t <= t_max`` keeping signs; zero the blocking entry."""
    cur = b[S]
    crossing = (cur * step < 0) & (step != 0)
    t = t_max
    j = -1
    if crossing.any():
        ratios = np.full(S.size, np.inf)
        ratios[crossing] = -cur[crossing] / step[crossing]
        j = int(np.argmin(ratios))
        if ratios[j] < t:
            t = ratios[j]
        else:
            j = -1
    if not np.isfinite(t):
        return False, False
    b[S] = cur + t * step
    if j >= 0:
        b[S[j]] = 0.0
    return True, j >= 0


def fit_arrays(X, Y, lam: float, max_sweeps: int = 10_000, kkt_tol: float = 1e-8, warm_start=None):
    """Array-level fit; see ``fit``. ``Y`` may be 1-D for a single response."""
    X = as_matrix(X, "X")
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    Y = as_matrix(Y, "Y")
    n_obs, p = X.shape
    if Y.shape[0] != n_obs:
        raise ValueError(f"X has {n_obs} rows, Y has {Y.shape[0]}")
    if n_obs < 1:
        raise ValueError("need at least one observation")
    config = LassoConfig(lam, max_sweeps, kkt_tol)
    q = Y.shape[1]

    gram = X.T @ X
    # per column so each response column is fitted identically whatever q is
    xty = np.column_stack([X.T @ np.ascontiguousarray(Y[:, k]) for k in range(q)])
    yty = np.array([float(Y[:, k] @ Y[:, k]) for k in range(q)])
    pinned = tuple(int(j) for j in np.flatnonzero(np.diag(gram) == 0.0))
    if pinned:
        warnings.warn(f"zero-norm regressor columns {pinned} pinned to 0", stacklevel=3)

    if warm_start is None:
        beta = np.zeros((p, q))
    else:
        beta = as_matrix(warm_start, "warm_start").copy()
        if beta.shape != (p, q):
            raise ValueError(f"warm start shape {beta.shape} != {(p, q)}")

    sweeps_used = 0
    worst_kkt = 0.0
    traces = []
    for k in range(q):
        col = np.ascontiguousarray(beta[:, k])
        c = np.ascontiguousarray(xty[:, k])
        sweeps, kkt, trace = _solve_column(gram, c, float(yty[k]), float(n_obs), float(config.lam), col,
                                           int(config.max_sweeps), float(config.kkt_tol))
        beta[:, k] = col
        sweeps_used = max(sweeps_used, sweeps)
        worst_kkt = max(worst_kkt, kkt)
        traces.append(trace)

    converged = worst_kkt <= config.kkt_tol
    if not converged:
        warnings.warn(
            f"coordinate descent stopped after {config.max_sweeps} sweeps with KKT residual {worst_kkt:.3g}",
            stacklevel=3,
        )
    return LassoFit(
        theta_hat=CoefficientMatrix(beta),
        sweeps_used=sweeps_used,
        kkt_residual=worst_kkt,
        objective=objective(X, Y, beta, config.lam),
        converged=converged,
        lam=float(config.lam),
        pinned=pinned,
        objective_trace=tuple(traces),
    )


def fit(sample: TimeSeriesSample, config: LassoConfig) -> LassoFit:
    """Lasso estimate of the coefficient matrix regressing ``sample.Y`` on ``sample.X``.

    The q response columns are independent problems sharing ``X'X``; each is
    solved by cyclic coordinate descent until the KKT residual is at most
    ``config.kkt_tol`` or ``config.max_sweeps`` sweeps have run.
    """
    warm = None if config.warm_start is None else config.warm_start.values
    return fit_arrays(sample.X, sample.Y, config.lam, config.max_sweeps, config.kkt_tol, warm)


def lambda_max(X, Y) -> float:
    """Smallest lambda whose solution is identically zero: ``max |(2/T) X'Y|``."""
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64).reshape(X.shape[0], -1)
    return float(np.abs(2.0 * X.T @ Y / X.shape[0]).max())


def lambda_theory(p: int, q: int, T: int, c_lambda: float = 1.0) -> float:
    """``c_lambda * sqrt(log(pq) / T)``."""
    if min(p, q, T) < 1:
        raise ValueError("p, q, T must be >= 1")
    return c_lambda * math.sqrt(math.log(p * q) / T)


def _residual_matrix(sample: TimeSeriesSample, theta_star: CoefficientMatrix) -> np.ndarray:
    theta = theta_star.values if isinstance(theta_star, CoefficientMatrix) else as_matrix(theta_star)
    if theta.shape != (sample.p, sample.q):
        raise ValueError(f"theta_star shape {theta.shape} != {(sample.p, sample.q)}")
    return sample.Y - sample.X @ theta


def lambda_oracle(sample: TimeSeriesSample, theta_star: CoefficientMatrix) -> float:
    """``4 (1/T) ||X'W||_inf`` with ``W = Y - X theta_star``."""
    W = _residual_matrix(sample, theta_star)
    return float(4.0 * np.abs(sample.X.T @ W).max() / sample.n_obs)


def errors(fit_result: LassoFit, theta_star: CoefficientMatrix, sample: TimeSeriesSample) -> ErrorReport:
    theta = theta_star.values if isinstance(theta_star, CoefficientMatrix) else as_matrix(theta_star)
    diff = fit_result.theta_hat.values - theta
    gram = sample.X.T @ sample.X / sample.n_obs
    pred = diff.T @ gram @ diff
    return ErrorReport(
        l2_vec_error=float(np.sqrt(np.sum(diff**2))),
        in_sample_pred_error=float(np.sqrt(np.sum(pred**2))),
    )
