"""Dense matrix primitives: spectral radius, Lyapunov series, autocovariance, norms."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import soft_threshold_scalar

__all__ = [
    "SpectralInfo",
    "MatrixNorms",
    "as_matrix",
    "spectral_radius",
    "solve_discrete_lyapunov",
    "empirical_autocovariance",
    "soft_threshold",
    "norms",
]


@dataclass(frozen=True)
class SpectralInfo:
    radius: float
    iterations: int
    converged: bool


@dataclass(frozen=True)
class MatrixNorms:
    frobenius: float
    op_infinity_entrywise: float
    l1_vec: float
    l2_vec: float


def as_matrix(m, name="matrix") -> np.ndarray:
    """Return ``m`` as a finite 2-D float64 array or raise ``ValueError``."""
    arr = np.asarray(m, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def _square(m, name):
    arr = as_matrix(m, name)
    if arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be square, got shape {arr.shape}")
    return arr


def spectral_radius(m, tol: float = 1e-10, max_iter: int = 10_000) -> SpectralInfo:
    """Largest eigenvalue modulus of a real square matrix.

    Power iteration applied to the matrix itself: the iterate is repeatedly
    squared and renormalised, so after ``k`` steps the estimate is
    ``||m^(2^k)||^(1/2^k)`` (Gelfand's formula). Unlike vector power
    iteration this converges when the dominant eigenvalues form a complex
    pair or a +/- pair of equal modulus.

    ``iterations`` counts squarings. Convergence is declared when two
    successive estimates agree to ``tol`` relative to the estimate.
    """
    a = _square(m, "m")
    n = a.shape[0]
    if n == 0:
        return SpectralInfo(0.0, 0, True)
    nrm = np.abs(a).max()
    if nrm == 0.0:
        return SpectralInfo(0.0, 0, True)
    b = a / nrm
    log_scale = np.log(nrm)  # log of the factor stripped from m^(2^k), divided by 2^k
    weight = 1.0
    estimate = float(nrm)
    agreed = 0
    for k in range(1, max_iter + 1):
        b = b @ b
        weight *= 0.5
        nrm = np.abs(b).max()
        if nrm == 0.0:
            # nilpotent
            return SpectralInfo(0.0, k, True)
        b /= nrm
        log_scale += weight * np.log(nrm)
        new = float(np.exp(log_scale))
        # two agreeing steps in a row guard against a chance coincidence
        agreed = agreed + 1 if abs(new - estimate) <= tol * max(new, np.finfo(float).tiny) else 0
        estimate = new
        if agreed >= 2:
            return SpectralInfo(new, k, True)
        if weight == 0.0:
            return SpectralInfo(new, k, False)
    return SpectralInfo(estimate, max_iter, False)


def solve_discrete_lyapunov(a, q, tol: float = 1e-12, max_terms: int = 1_000_000) -> np.ndarray:
    """Solve ``S = a S a' + q`` by summing ``sum_k a^k q (a')^k``.

    Stops once a term's entrywise maximum drops below ``tol``; the residual of
    the returned matrix equals the first omitted term, so it is at most ``tol``.
    Requires ``spectral_radius(a) < 1``.
    """
    a = _square(a, "a")
    q = _square(q, "q")
    if a.shape != q.shape:
        raise ValueError(f"dimension mismatch: a {a.shape} vs q {q.shape}")
    info = spectral_radius(a)
    if info.radius >= 1.0:
        raise ValueError(f"a is not stable (spectral radius {info.radius:.6g} >= 1)")
    total = q.copy()
    term = q.copy()
    for _ in range(max_terms):
        term = a @ term @ a.T
        if np.abs(term).max() <= tol:
            break
        total += term
    else:
        raise RuntimeError("Lyapunov series did not converge")
    return 0.5 * (total + total.T)


def empirical_autocovariance(x, lag: int = 0) -> np.ndarray:
    """``(1/T) sum_t x_t x_{t+lag}'`` over the valid range of ``t``.

    Normalised by ``T`` for every lag, so lag 0 is exactly ``X'X/T``.
    """
    x = as_matrix(x, "x")
    n_obs = x.shape[0]
    lag = int(lag)
    if abs(lag) >= n_obs:
        raise ValueError(f"|lag| must be < T={n_obs}, got {lag}")
    if lag >= 0:
        lead, follow = x[: n_obs - lag], x[lag:]
    else:
        lead, follow = x[-lag:], x[: n_obs + lag]
    return lead.T @ follow / n_obs


def soft_threshold(z, lam: float):
    """``sign(z) * max(|z| - lam, 0)``; accepts scalars or arrays."""
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    if np.ndim(z) == 0:
        return soft_threshold_scalar(float(z), float(lam))
    z = np.asarray(z, dtype=np.float64)
    return np.sign(z) * np.maximum(np.abs(z) - lam, 0.0)


def norms(m) -> MatrixNorms:
    arr = as_matrix(m, "m")
    flat = arr.ravel()
    if flat.size == 0:
        return MatrixNorms(0.0, 0.0, 0.0, 0.0)
    l2 = float(np.sqrt(np.dot(flat, flat)))
    return MatrixNorms(
        frobenius=l2,
        op_infinity_entrywise=float(np.abs(flat).max()),
        l1_vec=float(np.abs(flat).sum()),
        l2_vec=l2,
    )
