"""Configurations, pair indices, and the collapse/reduction maps.

A configuration of N labeled planar particles is an (N, 2) float64 array;
labels are 1-based in every public signature.  A pair index names an
unordered pair through its sorted labels (hi, lo) with hi > lo.  The pair
coordinates used throughout are the unitary combinations

    rel = (z_hi - z_lo) / sqrt(2),    com = (z_hi + z_lo) / sqrt(2),

so that passing between particle and pair coordinates is an isometry.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

SQRT2 = float(np.sqrt(2.0))

COLLAPSE_TOL = 1e-9


class PairIndex(NamedTuple):
    hi: int
    lo: int

    def validate(self, n_particles=None):
        if self.lo < 1 or self.hi <= self.lo:
            raise ValueError(f"pair {self} must satisfy hi > lo >= 1")
        if n_particles is not None and self.hi > n_particles:
            raise ValueError(f"pair {self} out of range for N={n_particles}")
        return self


def enumerate_pairs(n_particles):
    """All pairs of {1..N}, ordered by (lo, hi): [(2,1), (3,1), (3,2), ...]."""
    if n_particles < 2:
        raise ValueError("need at least two particles to form a pair")
    return [
        PairIndex(hi, lo)
        for lo in range(1, n_particles)
        for hi in range(lo + 1, n_particles + 1)
    ]


def ensure_config(z, n_particles=None):
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 2 or z.shape[1] != 2 or z.shape[0] < 2:
        raise ValueError("configuration must be an (N, 2) array with N >= 2")
    if not np.all(np.isfinite(z)):
        raise ValueError("configuration entries must be finite")
    if n_particles is not None and z.shape[0] != n_particles:
        raise ValueError(f"expected {n_particles} particles, got {z.shape[0]}")
    return z


def to_complex(z):
    z = ensure_config(z)
    return z[:, 0] + 1j * z[:, 1]


def from_complex(w):
    w = np.asarray(w, dtype=np.complex128)
    return np.column_stack([w.real, w.imag])


def rel(z, pair):
    """Relative pair coordinate (z_hi - z_lo) / sqrt(2), a planar point."""
    z = ensure_config(z)
    pair.validate(z.shape[0])
    return (z[pair.hi - 1] - z[pair.lo - 1]) / SQRT2


def com(z, pair):
    """Center pair coordinate (z_hi + z_lo) / sqrt(2), a planar point."""
    z = ensure_config(z)
    pair.validate(z.shape[0])
    return (z[pair.hi - 1] + z[pair.lo - 1]) / SQRT2


def sigma(pair, n_particles):
    """Signed incidence vector of a pair: +1 at hi, -1 at lo, 0 elsewhere."""
    pair.validate(n_particles)
    out = np.zeros(n_particles, dtype=np.int64)
    out[pair.hi - 1] = 1
    out[pair.lo - 1] = -1
    return out


def sigma_dot(pair_a, pair_b):
    """Inner product of two incidence vectors; takes values in {-1, 0, 1, 2}."""
    pair_a.validate()
    pair_b.validate()
    if pair_a == pair_b:
        return 2
    dot = 0
    if pair_a.hi == pair_b.hi:
        dot += 1
    if pair_a.lo == pair_b.lo:
        dot += 1
    if pair_a.hi == pair_b.lo:
        dot -= 1
    if pair_a.lo == pair_b.hi:
        dot -= 1
    return dot


def slash(z, pair):
    """Collapse a pair onto its lo component: both members sit at z_lo."""
    z = ensure_config(z).copy()
    pair.validate(z.shape[0])
    z[pair.hi - 1] = z[pair.lo - 1]
    return z


@dataclass(frozen=True)
class ReducedConfiguration:
    """Configuration with one pair fused into its center slot.

    ``points`` maps the surviving labels (everything except pair.lo) to
    planar points; the hi slot carries the pair's center coordinate.
    """

    pair: PairIndex
    points: dict

    def __post_init__(self):
        if self.pair.lo in self.points:
            raise ValueError("reduced configuration must drop the lo label")
        if self.pair.hi not in self.points:
            raise ValueError("reduced configuration must keep the hi slot")

    @property
    def n_particles(self):
        return len(self.points) + 1


def backslash(z, pair):
    """Fuse a pair: drop the lo slot, store the center coordinate under hi."""
    z = ensure_config(z)
    pair.validate(z.shape[0])
    pts = {
        k + 1: z[k].copy()
        for k in range(z.shape[0])
        if k + 1 not in (pair.hi, pair.lo)
    }
    pts[pair.hi] = com(z, pair)
    return ReducedConfiguration(pair, pts)


def dbl_backslash(reduced, pair=None):
    """Un-fuse: both pair members at center / sqrt(2), others copied back."""
    if pair is None:
        pair = reduced.pair
    elif pair != reduced.pair:
        raise ValueError("pair does not match the reduced configuration")
    n = reduced.n_particles
    pair.validate(n)
    z = np.empty((n, 2), dtype=np.float64)
    meet = np.asarray(reduced.points[pair.hi], dtype=np.float64) / SQRT2
    for label in range(1, n + 1):
        if label in (pair.hi, pair.lo):
            z[label - 1] = meet
        else:
            z[label - 1] = reduced.points[label]
    return z


class Separated:
    """No pair is within the collapse tolerance."""

    def __repr__(self):
        return "Separated()"

    def __eq__(self, other):
        return isinstance(other, Separated)

    def __hash__(self):
        return hash("Separated")


@dataclass(frozen=True)
class PairCollapsed:
    """Exactly one pair is within the collapse tolerance."""

    pair: PairIndex


class MultiCollapse:
    """Two or more pairs (or a higher-order cluster) are collapsed."""

    def __repr__(self):
        return "MultiCollapse()"

    def __eq__(self, other):
        return isinstance(other, MultiCollapse)

    def __hash__(self):
        return hash("MultiCollapse")


def classify_config(z, tol=COLLAPSE_TOL):
    """Which collision stratum a configuration sits in, at tolerance tol."""
    z = ensure_config(z)
    hits = [
        p
        for p in enumerate_pairs(z.shape[0])
        if float(np.hypot(*(z[p.hi - 1] - z[p.lo - 1]))) <= tol
    ]
    if not hits:
        return Separated()
    if len(hits) == 1:
        return PairCollapsed(hits[0])
    return MultiCollapse()
