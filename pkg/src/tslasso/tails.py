"""Innovation samplers and subweibull-norm calculus."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

__all__ = [
    "InnovationSpec",
    "SubweibullProfile",
    "GammaComposition",
    "gaussian",
    "uniform_isotropic",
    "centered_weibull",
    "sample_innovation",
    "innovation_covariance",
    "weibull_mean",
    "weibull_variance",
    "compose_gamma",
    "estimate_subweibull_norm",
    "square_norm_bound",
    "linear_map_norm_bound",
]

KINDS = ("gaussian", "uniform_isotropic", "centered_weibull")
_SQRT3 = math.sqrt(3.0)


@dataclass(frozen=True)
class InnovationSpec:
    """Distribution of one innovation vector.

    ``cov`` is used only by ``gaussian``; ``shape`` only by ``centered_weibull``.
    ``scale`` multiplies every draw.
    """

    kind: str
    dim: int
    cov: np.ndarray | None = field(default=None, compare=False)
    shape: float | None = None
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown innovation kind {self.kind!r}; expected one of {KINDS}")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        if self.kind == "gaussian":
            cov = np.eye(self.dim) if self.cov is None else np.asarray(self.cov, dtype=np.float64)
            if cov.shape != (self.dim, self.dim):
                raise ValueError(f"cov must be {self.dim}x{self.dim}")
            if not np.all(np.isfinite(cov)) or not np.allclose(cov, cov.T, atol=1e-12):
                raise ValueError("cov must be finite and symmetric")
            if np.linalg.eigvalsh(cov).min() <= 0:
                raise ValueError("cov must be positive definite")
            object.__setattr__(self, "cov", cov)
        if self.kind == "centered_weibull":
            if self.shape is None or not self.shape > 0:
                raise ValueError(f"Weibull shape must be > 0, got {self.shape}")

    def __eq__(self, other):
        if not isinstance(other, InnovationSpec):
            return NotImplemented
        same = (self.kind, self.dim, self.shape, self.scale) == (
            other.kind,
            other.dim,
            other.shape,
            other.scale,
        )
        if not same:
            return False
        if self.cov is None or other.cov is None:
            return self.cov is other.cov
        return bool(np.array_equal(self.cov, other.cov))

    __hash__ = None


def gaussian(dim: int, cov=None, scale: float = 1.0) -> InnovationSpec:
    return InnovationSpec("gaussian", dim, cov=cov, scale=scale)


def uniform_isotropic(dim: int, scale: float = 1.0) -> InnovationSpec:
    return InnovationSpec("uniform_isotropic", dim, scale=scale)


def centered_weibull(dim: int, shape: float, scale: float = 1.0) -> InnovationSpec:
    return InnovationSpec("centered_weibull", dim, shape=shape, scale=scale)


def weibull_mean(shape: float) -> float:
    """Mean of Weibull(shape, scale 1): Gamma(1 + 1/shape)."""
    return math.gamma(1.0 + 1.0 / shape)


def weibull_variance(shape: float) -> float:
    return math.gamma(1.0 + 2.0 / shape) - math.gamma(1.0 + 1.0 / shape) ** 2


def sample_innovation(spec: InnovationSpec, rng: np.random.Generator, size: int | None = None):
    """Draw one innovation vector, or ``size`` of them stacked as rows.

    Weibull variates come from the inverse CDF ``(-log U)^(1/shape)`` and are
    centred by subtracting the exact mean, so every kind has mean zero.
    """
    n = 1 if size is None else int(size)
    shape_out = (n, spec.dim)
    if spec.kind == "gaussian":
        z = rng.standard_normal(shape_out)
        draws = z @ np.linalg.cholesky(spec.cov).T
    elif spec.kind == "uniform_isotropic":
        draws = rng.uniform(-_SQRT3, _SQRT3, size=shape_out)
    else:
        u = 1.0 - rng.random(shape_out)  # (0, 1]
        draws = (-np.log(u)) ** (1.0 / spec.shape) - weibull_mean(spec.shape)
    if spec.scale != 1.0:
        draws = spec.scale * draws
    return draws[0] if size is None else draws


def innovation_covariance(spec: InnovationSpec) -> np.ndarray:
    """Population covariance of one innovation vector."""
    if spec.kind == "gaussian":
        base = spec.cov
    elif spec.kind == "uniform_isotropic":
        base = np.eye(spec.dim)
    else:
        base = weibull_variance(spec.shape) * np.eye(spec.dim)
    return spec.scale**2 * base


class GammaComposition(NamedTuple):
    gamma: float  # (1/g1 + 2/g2)^-1, governs squares and products
    gamma_pair: float  # (1/g1 + 1/g2)^-1, the single-sum concentration exponent


def compose_gamma(gamma1: float, gamma2: float) -> GammaComposition:
    """Combine the mixing-decay exponent ``gamma1`` with the tail exponent ``gamma2``."""
    if not (gamma1 > 0 and gamma2 > 0):
        raise ValueError("gamma1 and gamma2 must be positive")
    return GammaComposition(
        gamma=1.0 / (1.0 / gamma1 + 2.0 / gamma2),
        gamma_pair=1.0 / (1.0 / gamma1 + 1.0 / gamma2),
    )


@dataclass(frozen=True)
class SubweibullProfile:
    gamma1: float
    gamma2: float
    k_x: float
    k_y: float

    def __post_init__(self):
        for name in ("gamma1", "gamma2", "k_x", "k_y"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def gamma(self) -> float:
        return compose_gamma(self.gamma1, self.gamma2).gamma

    @property
    def gamma_below_one(self) -> bool:
        return self.gamma < 1.0


def estimate_subweibull_norm(samples, gamma: float, p_max: int = 20) -> float:
    """Plug-in estimate of ``sup_p (E|X|^p)^(1/p) p^(-1/gamma)``.

    The supremum is taken over integer ``p`` in ``[1, p_max]`` with empirical
    moments. Truncating ``p`` and using sample moments both bias the result
    downward.
    """
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size == 0:
        raise ValueError("empty sample")
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    if p_max < 2:
        raise ValueError("p_max must be >= 2")
    if x.size < 100:
        warnings.warn(f"only {x.size} samples; the norm estimate is unreliable", stacklevel=2)
    absx = np.abs(x)
    top = absx.max()
    if top == 0.0:
        return 0.0
    # factor out the max so high moments neither overflow nor lose homogeneity
    u = absx / top
    best = 0.0
    for p in range(1, p_max + 1):
        moment = np.mean(u**p) ** (1.0 / p)
        best = max(best, moment * p ** (-1.0 / gamma))
    return float(top * best)


def square_norm_bound(norm_2gamma: float, gamma: float) -> float:
    """Bound on the psi_gamma norm of X^2 from the psi_{2 gamma} norm of X."""
    if norm_2gamma < 0 or not gamma > 0:
        raise ValueError("need norm_2gamma >= 0 and gamma > 0")
    return 2.0 ** (1.0 / gamma) * norm_2gamma**2


def linear_map_norm_bound(op_norm: float, vec_norm: float) -> float:
    """Bound on the subweibull norm of ``A X`` from ``|||A|||`` and ``||X||``."""
    if op_norm < 0 or vec_norm < 0:
        raise ValueError("norms must be nonnegative")
    return op_norm * vec_norm
