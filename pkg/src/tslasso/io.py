"""TOML serialisation of mechanism specs and CSV exchange of samples / matrices.

Spec documents look like::

    kind = "arch"            # gaussian_var | subweibull_var | omitted_var | arch | copy_dependence
    coef = [[0.5, 0.0], [0.1, 0.3]]   # VAR kinds use  coefs = [A_1, A_2, ...]
    c = 1.0
    m = 0.5
    a = 0.5
    b = 2.0

    [innovation]
    kind = "uniform_isotropic"        # gaussian | uniform_isotropic | centered_weibull
    dim = 2
    scale = 1.0
    # shape = 1.0                     (centered_weibull)
    # cov = [[1.0, 0.0], [0.0, 1.0]]  (gaussian)

``gaussian_var`` has no ``[innovation]`` table and takes ``sigma_eps`` instead.
Floats are written with full ``repr`` precision so documents round-trip exactly.
"""

from __future__ import annotations

import csv
import sys
from pathlib import Path

import numpy as np
import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .dgm import Arch, CopyDependence, GaussianVar, OmittedVar, SubweibullVar, TimeSeriesSample
from .tails import InnovationSpec

__all__ = [
    "spec_to_dict",
    "spec_from_dict",
    "dump_spec",
    "load_spec",
    "write_sample_csv",
    "read_sample_csv",
    "write_matrix_csv",
    "read_matrix_csv",
    "load_toml",
    "loads_spec",
]


def _mat(a):
    return np.asarray(a, dtype=np.float64).tolist()


def _innovation_to_dict(spec: InnovationSpec) -> dict:
    out = {"kind": spec.kind, "dim": spec.dim, "scale": float(spec.scale)}
    if spec.kind == "gaussian":
        out["cov"] = _mat(spec.cov)
    if spec.kind == "centered_weibull":
        out["shape"] = float(spec.shape)
    return out


def _innovation_from_dict(d: dict) -> InnovationSpec:
    cov = d.get("cov")
    return InnovationSpec(
        kind=d["kind"],
        dim=int(d["dim"]),
        cov=None if cov is None else np.asarray(cov, dtype=np.float64),
        shape=None if d.get("shape") is None else float(d["shape"]),
        scale=float(d.get("scale", 1.0)),
    )


def spec_to_dict(spec) -> dict:
    if not isinstance(spec, (GaussianVar, SubweibullVar, OmittedVar, Arch, CopyDependence)):
        raise TypeError(f"unsupported spec type {type(spec).__name__}")
    out = {"kind": spec.kind}
    if isinstance(spec, GaussianVar):
        out["coefs"] = [_mat(a) for a in spec.coefs]
        out["sigma_eps"] = _mat(spec.sigma_eps)
        return out
    if isinstance(spec, SubweibullVar):
        out["coefs"] = [_mat(a) for a in spec.coefs]
    elif isinstance(spec, OmittedVar):
        out["coef"] = _mat(spec.coef)
    elif isinstance(spec, Arch):
        out.update(coef=_mat(spec.coef), c=float(spec.c), m=float(spec.m), a=float(spec.a), b=float(spec.b))
    else:
        out.update(coef=_mat(spec.coef), noise_scale=float(spec.noise_scale), rho=float(spec.rho))
    out["innovation"] = _innovation_to_dict(spec.innovation)
    return out


def spec_from_dict(d: dict):
    kind = d.get("kind")
    if kind == "gaussian_var":
        return GaussianVar(tuple(np.asarray(a, dtype=np.float64) for a in d["coefs"]), d.get("sigma_eps"))
    if kind not in ("subweibull_var", "omitted_var", "arch", "copy_dependence"):
        raise ValueError(f"unknown spec kind {kind!r}")
    innov = _innovation_from_dict(d["innovation"])
    if kind == "subweibull_var":
        return SubweibullVar(tuple(np.asarray(a, dtype=np.float64) for a in d["coefs"]), innov)
    coef = np.asarray(d["coef"], dtype=np.float64)
    if kind == "omitted_var":
        return OmittedVar(coef, innov)
    if kind == "arch":
        return Arch(coef, innov, c=float(d.get("c", 1.0)), m=float(d.get("m", 0.5)),
                    a=float(d.get("a", 0.5)), b=float(d.get("b", 2.0)))
    return CopyDependence(coef, innov, noise_scale=float(d.get("noise_scale", 0.5)), rho=float(d.get("rho", 0.0)))


def dump_spec(spec, path=None) -> str:
    text = tomli_w.dumps(spec_to_dict(spec))
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def load_toml(path) -> dict:
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def load_spec(path):
    return spec_from_dict(load_toml(path))


def loads_spec(text: str):
    return spec_from_dict(tomllib.loads(text))


def write_sample_csv(sample: TimeSeriesSample, path) -> None:
    """Header ``t,x_1..x_p,y_1..y_q``; values in full precision."""
    header = ["t"] + [f"x_{j + 1}" for j in range(sample.p)] + [f"y_{j + 1}" for j in range(sample.q)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for t in range(sample.n_obs):
            w.writerow([t + 1] + [repr(float(v)) for v in sample.X[t]] + [repr(float(v)) for v in sample.Y[t]])


def read_sample_csv(path) -> TimeSeriesSample:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path} is empty")
    header = rows[0]
    xcols = [i for i, h in enumerate(header) if h.startswith("x_")]
    ycols = [i for i, h in enumerate(header) if h.startswith("y_")]
    if not xcols or not ycols:
        raise ValueError("sample CSV needs x_* and y_* columns")
    data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=np.float64).reshape(-1, len(header))
    return TimeSeriesSample(X=data[:, xcols], Y=data[:, ycols])


def write_matrix_csv(mat, path) -> None:
    mat = np.asarray(mat, dtype=np.float64)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in np.atleast_2d(mat):
            w.writerow([repr(float(v)) for v in row])


def read_matrix_csv(path) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    return np.array([[float(v) for v in r] for r in rows], dtype=np.float64)
