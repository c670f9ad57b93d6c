"""Lasso estimation for sparse, dependent and heavy-tailed time series.

Modules: ``matops`` (matrix primitives), ``tails`` (innovations and subweibull
calculus), ``dgm`` (data-generating mechanisms), ``lasso`` (coordinate
descent estimator), ``conditions`` (RE/DB certificates, bounds, concentration
validators), ``experiments`` and ``report`` (Monte-Carlo studies), ``cli``.
"""

from . import conditions, dgm, experiments, io, lasso, matops, report, tails
from ._accel import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "conditions", "dgm", "experiments", "io", "lasso", "matops", "report", "tails", "__version__"]
