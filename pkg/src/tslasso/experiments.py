"""Monte-Carlo studies: heavy-tailed VAR, copy-dependence, and rescaled-sample alignment.

Each replicate uses two generators derived with ``SeedSequence`` spawn keys:
a design stream keyed by ``(p, rep)`` that draws the coefficient matrix and a
noise stream keyed by ``(p, m, rep)`` that drives the simulation. Levels
(shape or rho) share both streams, so comparisons across levels are paired.
A row depends only on its grid position and the root seed, never on
scheduling.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import lasso
from .dgm import CopyDependence, GaussianVar, SubweibullVar, generate_sparse_stable, simulate
from .tails import centered_weibull

__all__ = [
    "STUDIES",
    "COLUMNS",
    "ExperimentGrid",
    "ExperimentResult",
    "default_grid",
    "full_grid",
    "grid_from_dict",
    "sample_size",
    "sparsity_for",
    "derive_seed",
    "run_experiment",
    "run_alignment_study",
    "cell_means",
    "alignment_gap",
]

log = logging.getLogger(__name__)

STUDIES = ("heavy_tail", "dependence", "alignment")
COLUMNS = (
    "study", "p", "s", "T", "m", "shape_or_rho", "rep", "seed",
    "lambda", "frob_error", "pred_error", "fit_sweeps", "wall_ms",
)
ODD_MULTIPLES = (1, 3, 5, 7, 9, 11, 13, 15, 17, 19)


@dataclass(frozen=True)
class ExperimentGrid:
    """One study's grid.

    ``levels`` holds Weibull shapes (heavy_tail) or copy probabilities
    (dependence); alignment ignores it. ``sparsity`` is ``"sqrt"``
    (``floor(sqrt(p))``), ``"p"``, or an explicit integer.
    """

    study: str
    p_list: tuple = (20, 40)
    levels: tuple = ()
    m_multiples: tuple = ODD_MULTIPLES
    reps: int = 5
    root_seed: int = 0
    spectral_c: float = 0.5
    noise_scale: float = 0.5
    shape: float = 1.0
    burn_in: int = 1000
    sparsity: object = "sqrt"
    lambda_mode: str = "oracle"
    c_lambda: float = 1.0
    lambda_value: float = 0.1

    def __post_init__(self):
        if self.study not in STUDIES:
            raise ValueError(f"unknown study {self.study!r}")
        if self.lambda_mode not in ("oracle", "theory", "fixed"):
            raise ValueError(f"unknown lambda mode {self.lambda_mode!r}")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        for name in ("p_list", "levels", "m_multiples"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.study == "alignment" and not self.levels:
            object.__setattr__(self, "levels", (0.0,))
        if not self.levels:
            raise ValueError(f"{self.study} needs a non-empty levels list")

    def cells(self):
        """Grid points ``(p, level, m)`` in canonical order."""
        return [(p, lev, m) for p in self.p_list for lev in self.levels for m in self.m_multiples]


@dataclass
class ExperimentResult:
    rows: list = field(default_factory=list)
    skipped: list = field(default_factory=list)

    def column(self, name):
        return np.array([r[name] for r in self.rows])


def default_grid(study: str, **overrides) -> ExperimentGrid:
    """Desk-scale defaults: p in {20, 40}, five replicates."""
    base = {
        "heavy_tail": dict(levels=(0.4, 0.5, 1.0, 1.9)),
        "dependence": dict(levels=(0.2, 0.4, 0.6, 0.8), shape=1.0),
        "alignment": dict(p_list=(20, 40, 80), sparsity="p", levels=(0.0,)),
    }[study]
    base.update(overrides)
    return ExperimentGrid(study=study, **base)


def full_grid(study: str, **overrides) -> ExperimentGrid:
    """Published scale: p in {50, 100, 150, 200}, ten replicates."""
    overrides = {"p_list": (50, 100, 150, 200), "reps": 10, **overrides}
    return default_grid(study, **overrides)


def grid_from_dict(d: dict, study: str | None = None) -> ExperimentGrid:
    d = dict(d)
    policy = d.pop("lambda_policy", {}) or {}
    study = d.pop("study", study)
    if "shapes" in d:
        d["levels"] = d.pop("shapes")
    if "rhos" in d:
        d["levels"] = d.pop("rhos")
    d["lambda_mode"] = policy.get("mode", d.get("lambda_mode", "oracle"))
    if "c_lambda" in policy:
        d["c_lambda"] = float(policy["c_lambda"])
    if "value" in policy:
        d["lambda_value"] = float(policy["value"])
    return default_grid(study, **d)


def sparsity_for(grid: ExperimentGrid, p: int) -> int:
    if grid.sparsity == "sqrt":
        return int(math.isqrt(p))
    if grid.sparsity == "p":
        return int(p)
    return int(grid.sparsity)


def sample_size(m: int, s: int, p: int) -> int:
    """``T = m * ceil(s * ln p)``."""
    return int(m * math.ceil(s * math.log(p)))


def derive_seed(root_seed: int, *key: int) -> int:
    """63-bit seed from ``SeedSequence(root_seed, spawn_key=key)``."""
    ss = np.random.SeedSequence(entropy=int(root_seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def replicate_seeds(grid: ExperimentGrid, p: int, m: int, rep: int):
    """``(design_seed, noise_seed)`` for one replicate of one cell.

    The design stream (coefficient matrix) is keyed by ``(p, rep)`` and the
    noise stream by ``(p, m, rep)``; neither depends on the level, so cells
    that differ only in shape or rho see the same matrix and the same
    underlying uniforms/normals (common random numbers).
    """
    pi = grid.p_list.index(p)
    mi = grid.m_multiples.index(m)
    return derive_seed(grid.root_seed, 1, pi, rep), derive_seed(grid.root_seed, 0, pi, mi, rep)


def _lambda_for(grid, sample, theta):
    if grid.lambda_mode == "oracle":
        return lasso.lambda_oracle(sample, theta)
    if grid.lambda_mode == "theory":
        return lasso.lambda_theory(sample.p, sample.q, sample.n_obs, grid.c_lambda)
    return float(grid.lambda_value)


def _spec_for(grid, coef, level):
    p = coef.shape[0]
    if grid.study == "heavy_tail":
        return SubweibullVar((coef,), centered_weibull(p, level, scale=grid.noise_scale))
    if grid.study == "dependence":
        return CopyDependence(coef, centered_weibull(p, grid.shape), noise_scale=grid.noise_scale, rho=level)
    return GaussianVar((coef,))


def _run_task(task):
    grid, cell, p, level, m, rep = task
    s = sparsity_for(grid, p)
    design_seed, seed = replicate_seeds(grid, p, m, rep)
    if not 1 <= s <= p * p:
        return {"skip": True, "cell": cell, "rep": rep, "reason": f"infeasible sparsity s={s} for p={p}"}
    T = sample_size(m, s, p)
    start = time.perf_counter()
    coef = generate_sparse_stable(p, s, grid.spectral_c, np.random.default_rng(design_seed)).values
    spec = _spec_for(grid, coef, level)
    rng = np.random.default_rng(seed)
    sample = simulate(spec, T, burn_in=grid.burn_in, rng=rng)
    theta = lasso.CoefficientMatrix(coef.T.copy())
    lam = _lambda_for(grid, sample, theta)
    fitted = lasso.fit(sample, lasso.LassoConfig(lam))
    err = lasso.errors(fitted, theta, sample)
    wall_ms = (time.perf_counter() - start) * 1000.0
    return {
        "study": grid.study, "p": p, "s": s, "T": T, "m": m,
        "shape_or_rho": float(level), "rep": rep, "seed": seed,
        "lambda": lam,
        "frob_error": float(np.linalg.norm(coef - fitted.theta_hat.values.T)),
        "pred_error": err.in_sample_pred_error,
        "fit_sweeps": fitted.sweeps_used,
        "wall_ms": wall_ms,
        "_key": (cell, rep),
    }


def run_experiment(grid: ExperimentGrid, jobs: int = 1) -> ExperimentResult:
    """Run every (cell, replicate) of ``grid`` and collect rows in grid order."""
    tasks = [
        (grid, cell, p, level, m, rep)
        for cell, (p, level, m) in enumerate(grid.cells())
        for rep in range(grid.reps)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outputs = list(pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        outputs = [_run_task(t) for t in tasks]

    result = ExperimentResult()
    for out in outputs:
        if out.get("skip"):
            log.warning("skipping cell %d rep %d: %s", out["cell"], out["rep"], out["reason"])
            result.skipped.append(out)
        else:
            result.rows.append(out)
    result.rows.sort(key=lambda r: r["_key"])
    for r in result.rows:
        r.pop("_key")
    return result


def run_alignment_study(p_list=(20, 40, 80), m_multiples=ODD_MULTIPLES, reps=5, root_seed=0, jobs=1, **overrides):
    """Gaussian VAR(1) errors over ``T = m ceil(s ln p)`` with the oracle lambda."""
    grid = default_grid(
        "alignment", p_list=tuple(p_list), m_multiples=tuple(m_multiples), reps=reps,
        root_seed=root_seed, lambda_mode="oracle", **overrides,
    )
    return run_experiment(grid, jobs=jobs)


def x_value(row, x_axis: str) -> float:
    scaled = row["T"] / (row["s"] * math.log(row["p"]))
    if x_axis == "T_over_slogp":
        return scaled
    if x_axis == "rescaled_sqrt":
        return 1.0 / math.sqrt(scaled)
    raise ValueError(f"unknown x axis {x_axis!r}")


def cell_means(result: ExperimentResult, x_axis: str = "rescaled_sqrt", group_by: str = "p", metric: str = "frob_error"):
    """Mean ``metric`` per grid cell, arranged as curves.

    Returns ``{(panel, group): (x, mean, stderr)}`` with points sorted by x.
    ``group`` is the ``group_by`` coordinate (``p`` or ``shape_or_rho``) and
    ``panel`` the other one, so curves never mix cells that differ in both.
    """
    if group_by not in ("p", "shape_or_rho"):
        raise ValueError(f"unknown group_by {group_by!r}")
    cells = {}
    for r in result.rows:
        cells.setdefault((r["p"], r["shape_or_rho"], r["m"]), []).append(r)
    curves = {}
    for (p, level, _m), rows in cells.items():
        key = (level, p) if group_by == "p" else (p, level)
        vals = np.array([r[metric] for r in rows], dtype=np.float64)
        se = float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else float("nan")
        curves.setdefault(key, []).append((x_value(rows[0], x_axis), float(vals.mean()), se))
    out = {}
    for key in sorted(curves):
        pts = sorted(curves[key])
        out[key] = tuple(np.array(col) for col in zip(*pts))
    return out


def alignment_gap(result: ExperimentResult, x_axis: str = "T_over_slogp") -> float:
    """Largest vertical spread between per-p mean curves on their shared x-range,
    as a fraction of the overall range of the mean values.

    Curves are linearly interpolated onto every x at which any curve is
    observed inside the common range.
    """
    curves = list(cell_means(result, x_axis=x_axis, group_by="p").values())
    if len(curves) < 2:
        return 0.0
    all_means = np.concatenate([c[1] for c in curves])
    spread = all_means.max() - all_means.min()
    if spread == 0.0:
        return 0.0
    lo = max(c[0].min() for c in curves)
    hi = min(c[0].max() for c in curves)
    if lo > hi:
        raise ValueError("curves share no x-range")
    xs = np.concatenate([c[0] for c in curves])
    grid = np.unique(np.concatenate([xs[(xs >= lo) & (xs <= hi)], [lo, hi]]))
    interp = np.array([np.interp(grid, c[0], c[1]) for c in curves])
    return float((interp.max(axis=0) - interp.min(axis=0)).max() / spread)


def grid_to_dict(grid: ExperimentGrid) -> dict:
    d = asdict(grid)
    d["sparsity"] = grid.sparsity
    return d


def with_seed(grid: ExperimentGrid, seed: int) -> ExperimentGrid:
    return replace(grid, root_seed=int(seed))
