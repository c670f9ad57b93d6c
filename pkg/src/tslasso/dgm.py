"""Data-generating mechanisms and their population coefficient matrices.

Five mechanisms are supported, each a frozen dataclass:

``GaussianVar``      VAR(d) with Gaussian innovations
``SubweibullVar``    VAR(d) with any ``InnovationSpec`` (heavy tails allowed)
``OmittedVar``       VAR(1) on (Z, xi) where only Z is observed
``Arch``             VAR(1) mean with clipped isotropic ARCH volatility
``CopyDependence``   iid regression rows, each repeated with probability rho

``simulate`` turns a spec into regressor/response matrices ``X`` (T x p') and
``Y`` (T x q); ``population_theta`` returns the best linear predictor
coefficient matrix of ``Y_t`` on ``X_t`` (p' x q).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from . import kernels
from .matops import as_matrix, solve_discrete_lyapunov, spectral_radius
from .tails import InnovationSpec, gaussian, innovation_covariance, sample_innovation

__all__ = [
    "GaussianVar",
    "SubweibullVar",
    "OmittedVar",
    "Arch",
    "CopyDependence",
    "DgmSpec",
    "TimeSeriesSample",
    "CoefficientMatrix",
    "UnstableSpecError",
    "companion_form",
    "generate_sparse_stable",
    "simulate",
    "population_theta",
    "arch_volatility",
    "DEFAULT_BURN_IN",
]

DEFAULT_BURN_IN = 1000


class UnstableSpecError(ValueError):
    pass


def _check_equal_arrays(a, b):
    if len(a) != len(b):
        return False
    return all(np.array_equal(x, y) for x, y in zip(a, b))


def companion_form(a_list) -> np.ndarray:
    """Stack VAR(d) coefficients A_1..A_d into the dp x dp companion matrix."""
    mats = [as_matrix(a, f"A_{k + 1}") for k, a in enumerate(a_list)]
    if not mats:
        raise ValueError("need at least one coefficient matrix")
    p = mats[0].shape[0]
    for k, a in enumerate(mats):
        if a.shape != (p, p):
            raise ValueError(f"A_{k + 1} has shape {a.shape}, expected ({p}, {p})")
    d = len(mats)
    out = np.zeros((d * p, d * p))
    out[:p] = np.hstack(mats)
    if d > 1:
        out[p:, : (d - 1) * p] = np.eye((d - 1) * p)
    return out


def _require_stable(mat, what):
    radius = spectral_radius(mat).radius
    if not radius < 1.0:
        raise UnstableSpecError(f"{what} has spectral radius {radius:.6g} >= 1")
    return radius


def _coef_tuple(coefs):
    if isinstance(coefs, np.ndarray) and coefs.ndim == 2:
        coefs = [coefs]
    return tuple(as_matrix(a, "coef") for a in coefs)


@dataclass(frozen=True, eq=False)
class GaussianVar:
    coefs: tuple
    sigma_eps: np.ndarray | None = None

    kind = "gaussian_var"

    def __post_init__(self):
        coefs = _coef_tuple(self.coefs)
        object.__setattr__(self, "coefs", coefs)
        p = coefs[0].shape[0]
        sigma = np.eye(p) if self.sigma_eps is None else as_matrix(self.sigma_eps, "sigma_eps")
        object.__setattr__(self, "sigma_eps", sigma)
        gaussian(p, sigma)  # validates sigma
        _require_stable(companion_form(coefs), "companion matrix")

    @property
    def dim(self):
        return self.coefs[0].shape[0]

    @property
    def lags(self):
        return len(self.coefs)

    @property
    def innovation(self):
        return gaussian(self.dim, self.sigma_eps)

    def __eq__(self, other):
        return (
            isinstance(other, GaussianVar)
            and _check_equal_arrays(self.coefs, other.coefs)
            and np.array_equal(self.sigma_eps, other.sigma_eps)
        )


@dataclass(frozen=True, eq=False)
class SubweibullVar:
    coefs: tuple
    innovation: InnovationSpec

    kind = "subweibull_var"

    def __post_init__(self):
        coefs = _coef_tuple(self.coefs)
        object.__setattr__(self, "coefs", coefs)
        if self.innovation.dim != coefs[0].shape[0]:
            raise ValueError("innovation dim does not match coefficient dimension")
        _require_stable(companion_form(coefs), "companion matrix")

    @property
    def dim(self):
        return self.coefs[0].shape[0]

    @property
    def lags(self):
        return len(self.coefs)

    def __eq__(self, other):
        return (
            isinstance(other, SubweibullVar)
            and _check_equal_arrays(self.coefs, other.coefs)
            and self.innovation == other.innovation
        )


@dataclass(frozen=True, eq=False)
class OmittedVar:
    """Full (p+1)-dimensional VAR(1); the last coordinate is never observed."""

    coef: np.ndarray
    innovation: InnovationSpec

    kind = "omitted_var"

    def __post_init__(self):
        coef = as_matrix(self.coef, "coef")
        object.__setattr__(self, "coef", coef)
        n = coef.shape[0]
        if coef.shape != (n, n) or n < 2:
            raise ValueError("coef must be square with size >= 2")
        if self.innovation.dim != n:
            raise ValueError("innovation dim must equal the full system size p+1")
        _require_stable(coef, "full-system coefficient")

    @property
    def dim(self):
        return self.coef.shape[0] - 1

    @property
    def blocks(self):
        p = self.dim
        a = self.coef
        return {"zz": a[:p, :p], "zxi": a[:p, p:], "xiz": a[p:, :p], "xixi": a[p:, p:]}

    def __eq__(self, other):
        return (
            isinstance(other, OmittedVar)
            and np.array_equal(self.coef, other.coef)
            and self.innovation == other.innovation
        )


@dataclass(frozen=True, eq=False)
class Arch:
    coef: np.ndarray
    innovation: InnovationSpec
    c: float = 1.0
    m: float = 0.5
    a: float = 0.5
    b: float = 2.0

    kind = "arch"

    def __post_init__(self):
        coef = as_matrix(self.coef, "coef")
        object.__setattr__(self, "coef", coef)
        if coef.shape[0] != coef.shape[1]:
            raise ValueError("coef must be square")
        if self.innovation.dim != coef.shape[0]:
            raise ValueError("innovation dim does not match coef")
        if not self.c > 0:
            raise ValueError("c must be positive")
        if not 0 < self.m < 1:
            raise ValueError("m must lie in (0, 1)")
        if not 0 < self.a < self.b:
            raise ValueError("need 0 < a < b")
        _require_stable(coef, "coef")

    @property
    def dim(self):
        return self.coef.shape[0]

    def __eq__(self, other):
        return (
            isinstance(other, Arch)
            and np.array_equal(self.coef, other.coef)
            and self.innovation == other.innovation
            and (self.c, self.m, self.a, self.b) == (other.c, other.m, other.a, other.b)
        )


@dataclass(frozen=True, eq=False)
class CopyDependence:
    """``Y_t = A X_t + noise_scale * eps_t`` with ``X_t ~ N(0, I)``; rows repeat w.p. ``rho``."""

    coef: np.ndarray
    innovation: InnovationSpec
    noise_scale: float = 0.5
    rho: float = 0.0

    kind = "copy_dependence"

    def __post_init__(self):
        coef = as_matrix(self.coef, "coef")
        object.__setattr__(self, "coef", coef)
        if self.innovation.dim != coef.shape[0]:
            raise ValueError("innovation dim must equal the number of responses")
        if not 0 <= self.rho < 1:
            raise ValueError("rho must lie in [0, 1)")
        if not self.noise_scale >= 0:
            raise ValueError("noise_scale must be nonnegative")

    @property
    def dim(self):
        return self.coef.shape[1]

    def __eq__(self, other):
        return (
            isinstance(other, CopyDependence)
            and np.array_equal(self.coef, other.coef)
            and self.innovation == other.innovation
            and (self.noise_scale, self.rho) == (other.noise_scale, other.rho)
        )


DgmSpec = Union[GaussianVar, SubweibullVar, OmittedVar, Arch, CopyDependence]


@dataclass(frozen=True)
class CoefficientMatrix:
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", as_matrix(self.values, "values"))

    @property
    def shape(self):
        return self.values.shape

    @property
    def support(self) -> tuple:
        rows, cols = np.nonzero(self.values)
        return tuple(zip(rows.tolist(), cols.tolist()))

    @property
    def sparsity(self) -> int:
        return int(np.count_nonzero(self.values))

    @property
    def T(self) -> "CoefficientMatrix":
        return CoefficientMatrix(self.values.T.copy())


@dataclass(frozen=True)
class TimeSeriesSample:
    X: np.ndarray
    Y: np.ndarray
    burn_in: int = 0
    seed: int | None = None
    spec: DgmSpec | None = None
    aux: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        X = as_matrix(self.X, "X")
        Y = as_matrix(self.Y, "Y")
        if X.shape[0] != Y.shape[0]:
            raise ValueError(f"X has {X.shape[0]} rows but Y has {Y.shape[0]}")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @property
    def n_obs(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def q(self) -> int:
        return self.Y.shape[1]


def generate_sparse_stable(
    p: int, s: int, target_radius: float, rng: np.random.Generator, max_draws: int = 10_000
) -> CoefficientMatrix:
    """Random ``p x p`` matrix with ``s`` U(0,1) entries at uniform positions,
    rescaled to spectral radius ``target_radius``.

    Supports that give a nilpotent matrix (radius 0) are redrawn.
    """
    if not 0 < target_radius < 1:
        raise ValueError("target_radius must lie in (0, 1)")
    if s == 0:
        raise ValueError("cannot rescale an all-zero matrix to a positive spectral radius")
    if not 0 < s <= p * p:
        raise ValueError(f"need 1 <= s <= p^2 = {p * p}, got s={s}")
    for _ in range(max_draws):
        flat = np.zeros(p * p)
        pos = rng.choice(p * p, size=s, replace=False)
        flat[pos] = rng.uniform(0.0, 1.0, size=s)
        mat = flat.reshape(p, p)
        if np.count_nonzero(mat) != s:
            continue  # a U(0,1) draw of exactly 0
        radius = spectral_radius(mat).radius
        if radius > 1e-12:
            mat *= target_radius / radius
            return CoefficientMatrix(mat)
    raise RuntimeError(f"no non-nilpotent support found in {max_draws} draws")


def arch_volatility(z, c: float, m: float, a: float, b: float):
    """Scalar volatility multiplier ``c * clip(||z||^m, a, b)``; rows of ``z`` if 2-D."""
    z = np.asarray(z, dtype=np.float64)
    level = np.linalg.norm(z, axis=-1) ** m
    return c * np.clip(level, a, b)


def _as_rng(rng):
    if isinstance(rng, np.random.Generator):
        return rng, None
    seed = int(rng)
    return np.random.default_rng(seed), seed


def simulate(spec: DgmSpec, T: int, burn_in: int = DEFAULT_BURN_IN, rng=0) -> TimeSeriesSample:
    """Simulate ``T`` regression pairs from ``spec`` after ``burn_in`` discarded steps.

    ``rng`` is an integer seed or a ``numpy.random.Generator``. Recursive
    mechanisms start from the zero state.
    """
    T = int(T)
    burn_in = int(burn_in)
    if T <= 0:
        raise ValueError("T must be positive")
    if burn_in < 0:
        raise ValueError("burn_in must be nonnegative")
    gen, seed = _as_rng(rng)
    n_steps = burn_in + T + 1
    aux = {}

    if isinstance(spec, (GaussianVar, SubweibullVar)):
        p, d = spec.dim, spec.lags
        comp = companion_form(spec.coefs)
        shocks = np.zeros((n_steps, d * p))
        shocks[:, :p] = sample_innovation(spec.innovation, gen, size=n_steps)
        states = np.empty_like(shocks)
        kernels.linear_recursion(comp, shocks, states)
        X = states[burn_in : burn_in + T]
        Y = states[burn_in + 1 : burn_in + T + 1, :p]
    elif isinstance(spec, OmittedVar):
        p = spec.dim
        shocks = sample_innovation(spec.innovation, gen, size=n_steps)
        states = np.empty_like(shocks)
        kernels.linear_recursion(spec.coef, shocks, states)
        X = states[burn_in : burn_in + T, :p]
        Y = states[burn_in + 1 : burn_in + T + 1, :p]
    elif isinstance(spec, Arch):
        shocks = sample_innovation(spec.innovation, gen, size=n_steps)
        states = np.empty_like(shocks)
        mult = np.empty(n_steps)
        kernels.arch_recursion(spec.coef, shocks, spec.c, spec.m, spec.a, spec.b, states, mult)
        X = states[burn_in : burn_in + T]
        Y = states[burn_in + 1 : burn_in + T + 1]
        aux["volatility"] = mult[burn_in + 1 : burn_in + T + 1].copy()
    elif isinstance(spec, CopyDependence):
        q, p = spec.coef.shape
        n_rows = burn_in + T
        fresh = gen.random(n_rows) >= spec.rho
        fresh[0] = True
        x_new = gen.standard_normal((n_rows, p))
        eps = sample_innovation(spec.innovation, gen, size=n_rows)
        y_new = x_new @ spec.coef.T + spec.noise_scale * eps
        src = np.maximum.accumulate(np.where(fresh, np.arange(n_rows), 0))
        X = x_new[src][burn_in:]
        Y = y_new[src][burn_in:]
        aux["fresh"] = fresh[burn_in:].copy()
    else:
        raise TypeError(f"unsupported spec type {type(spec).__name__}")

    return TimeSeriesSample(
        X=np.ascontiguousarray(X),
        Y=np.ascontiguousarray(Y),
        burn_in=burn_in,
        seed=seed,
        spec=spec,
        aux=aux,
    )


def population_theta(spec: DgmSpec) -> CoefficientMatrix:
    """Best linear predictor coefficients of ``Y_t`` on ``X_t`` under stationarity."""
    if isinstance(spec, (GaussianVar, SubweibullVar)):
        return CoefficientMatrix(np.vstack([a.T for a in spec.coefs]))
    if isinstance(spec, (Arch, CopyDependence)):
        return CoefficientMatrix(spec.coef.T.copy())
    if isinstance(spec, OmittedVar):
        p = spec.dim
        full = solve_discrete_lyapunov(spec.coef, innovation_covariance(spec.innovation))
        sigma_z = full[:p, :p]
        sigma_xiz = full[p:, :p]
        blocks = spec.blocks
        try:
            # A_ZXi Sigma_XiZ Sigma_Z^{-1} via a solve on the symmetric Sigma_Z
            correction = np.linalg.solve(sigma_z, (blocks["zxi"] @ sigma_xiz).T).T
        except np.linalg.LinAlgError as exc:
            raise ValueError("stationary covariance of Z is singular") from exc
        if not np.all(np.isfinite(correction)):
            raise ValueError("stationary covariance of Z is singular")
        return CoefficientMatrix((blocks["zz"] + correction).T)
    raise TypeError(f"unsupported spec type {type(spec).__name__}")
