"""Transition kernels: planar heat kernel, the product split, and the
composite free / contact building blocks of the diagrammatic series.

Weights and samplers are split on purpose.  Every kernel here is a product
of an explicit scalar factor and a Gaussian transition; the samplers draw
the Gaussian part and return the scalar part as a weight, which is the
factorization the Monte Carlo series evaluator rests on.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import geometry
from .geometry import SQRT2, PairIndex, ReducedConfiguration
from .specfun import DomainError, s_beta


def heat_kernel(t, dz):
    """Planar heat kernel density (2 pi t)^-1 exp(-|dz|^2 / (2 t)), t > 0.

    ``dz`` is a displacement: a planar point (2,) or a batch (..., 2).
    """
    if not t > 0.0:
        raise DomainError("heat_kernel requires t > 0")
    dz = np.asarray(dz, dtype=np.float64)
    sq = np.sum(dz * dz, axis=-1)
    out = np.exp(-sq / (2.0 * t)) / (2.0 * math.pi * t)
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class GaussianSplit:
    """Product form of two heat factors sharing their endpoint."""

    weight: float
    midpoint: np.ndarray
    half_time: float


def gaussian_product_split(t, a, b):
    """Split P_t(a, x) P_t(b, x) = P_2t(a, b) * P_{t/2}((a+b)/2, x).

    The returned weight no longer involves x, and the remaining x-dependence
    is a single Gaussian centered at the midpoint with variance t/2.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return GaussianSplit(
        weight=heat_kernel(2.0 * t, a - b),
        midpoint=0.5 * (a + b),
        half_time=0.5 * t,
    )


def free_kernel_weight(tau, s_next, u, v):
    """Density of the all-particles free flow from u (time tau) to v (time s_next)."""
    u = geometry.ensure_config(u)
    v = geometry.ensure_config(v, u.shape[0])
    if not s_next > tau:
        raise DomainError("free flow needs s_next > tau")
    return float(np.prod(heat_kernel(s_next - tau, v - u)))


def free_kernel_sample(tau, s_next, u, stream):
    """Draw from the all-particles free flow; the weight of this kernel is 1."""
    u = geometry.ensure_config(u)
    if not s_next > tau:
        raise DomainError("free flow needs s_next > tau")
    g = stream.normal_points(u.shape[0])
    return u + math.sqrt(s_next - tau) * g


def _require_collapsed(u, pair, tol):
    gap = float(np.hypot(*(u[pair.hi - 1] - u[pair.lo - 1])))
    if gap > tol:
        raise DomainError(
            f"contact kernel needs pair {tuple(pair)} collapsed; gap {gap:.3e}"
        )


def contact_kernel_weight(beta, pair, s, tau, u, reduced, tol=1e-9):
    """Density x rate of one contact window of ``pair`` over [s, tau].

    ``u`` is the entry configuration with the pair collapsed at its meeting
    point; ``reduced`` is the exit in fused coordinates.  The value is the
    contact rate s_beta(tau - s) times the heat factor carrying the fused
    center from sqrt(2) x meeting point, times free heat factors for the
    spectator particles.
    """
    u = geometry.ensure_config(u)
    pair.validate(u.shape[0])
    _require_collapsed(u, pair, tol)
    if not tau > s:
        raise DomainError("contact window needs tau > s")
    if not isinstance(reduced, ReducedConfiguration) or reduced.pair != pair:
        raise DomainError("reduced configuration does not match the pair")
    dt = tau - s
    meeting = u[pair.lo - 1]
    val = s_beta(beta, dt)
    val *= heat_kernel(dt, np.asarray(reduced.points[pair.hi]) - SQRT2 * meeting)
    for label, point in reduced.points.items():
        if label == pair.hi:
            continue
        val *= heat_kernel(dt, np.asarray(point) - u[label - 1])
    return float(val)


def contact_kernel_sample(beta, pair, s, tau, u, stream, tol=1e-9):
    """Sample one contact window; returns (weight, ReducedConfiguration).

    The Gaussian transitions are drawn, the non-Gaussian factor
    s_beta(tau - s) is returned as the weight.
    """
    u = geometry.ensure_config(u)
    pair.validate(u.shape[0])
    _require_collapsed(u, pair, tol)
    if not tau > s:
        raise DomainError("contact window needs tau > s")
    dt = tau - s
    n = u.shape[0]
    g = stream.normal_points(n - 1)
    root_dt = math.sqrt(dt)
    pts = {}
    row = 0
    for label in range(1, n + 1):
        if label == pair.lo:
            continue
        if label == pair.hi:
            pts[label] = SQRT2 * u[pair.lo - 1] + root_dt * g[row]
        else:
            pts[label] = u[label - 1] + root_dt * g[row]
        row += 1
    return s_beta(beta, dt), ReducedConfiguration(pair, pts)


def dissolve(reduced, pair=None):
    """Return to particle coordinates after a contact window.

    Both members of the pair reappear at center / sqrt(2); spectators are
    untouched.  Pure relabeling, weight 1.
    """
    return geometry.dbl_backslash(reduced, pair)
