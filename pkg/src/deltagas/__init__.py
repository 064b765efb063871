"""Numerical laboratory for planar point-interacting diffusions.

Two independent evaluation routes for the same semigroup, a diagrammatic
expansion over pair-contact sequences (``series``) and mollified
occupation-functional sampling along free paths (``mollified``), plus the
singular pair drift, its path functionals (``motion``), the scalar special
functions they rest on (``specfun``), and a deterministic counter-based
random stream shared by the compiled and pure NumPy backends (``rng``,
``backend``).
"""

from . import backend, geometry, kernels, mollified, motion, series, specfun
from .driver import Estimate, run_chunked
from .mollified import CouplingParams, MollifierSpec
from .specfun import DomainError, ToleranceError

__version__ = "0.1.0"

__all__ = [
    "CouplingParams",
    "DomainError",
    "Estimate",
    "MollifierSpec",
    "ToleranceError",
    "backend",
    "geometry",
    "kernels",
    "mollified",
    "motion",
    "run_chunked",
    "series",
    "specfun",
]
