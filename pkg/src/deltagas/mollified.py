"""Mollified occupation-functional route to the delta-gas semigroup.

The singular pair interaction is approached through a mollifier phi at
scale eps: each pair contributes the occupation integral of
phi_eps(Z_hi - Z_lo) weighted by the slowly diverging coupling

    c = 2 pi / L + 2 pi lambda / L^2,      L = log(1/eps),

and the semigroup value is the expectation of exp(sum of pair exponents)
times the observable under the free N-particle flow.  The pair strength
lambda and the contact scale beta are tied together by

    (log beta) / 2 = log 2 + lambda - gamma - E(phi),

with E(phi) the logarithmic self-energy of the mollifier; both directions
of that relation live here alongside the Euler occupation sampler.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import backend, geometry
from .driver import OCCUPATION_CHUNK, Estimate, run_chunked
from .specfun import (
    EULER_GAMMA,
    DomainError,
    QuadratureSpec,
    adaptive_quad,
)

MOLLIFIER_KINDS = ("smooth_bump", "disk_uniform")

# step-size guard for the Euler occupation integral: h <= eps^2 / 20
STEP_RATIO = 20.0


@dataclass(frozen=True)
class MollifierSpec:
    """Radial mollifier: compactly supported probability density on the plane."""

    kind: str = "smooth_bump"
    radius: float = 1.0

    def __post_init__(self):
        if self.kind not in MOLLIFIER_KINDS:
            raise DomainError(f"unknown mollifier kind {self.kind!r}")
        if not (self.radius > 0.0 and math.isfinite(self.radius)):
            raise DomainError("mollifier radius must be positive and finite")


DEFAULT_MOLLIFIER = MollifierSpec()

_BUMP_QUAD = QuadratureSpec(abs_tol=1e-13, rel_tol=1e-13)


def _bump_profile(r):
    """exp(-1/(1-r^2)) on [0, 1), zero outside; all derivatives vanish at 1."""
    r = np.asarray(r, dtype=np.float64)
    s2 = r * r
    inside = s2 < 1.0
    out = np.zeros_like(r)
    out[inside] = np.exp(-1.0 / (1.0 - s2[inside]))
    return out


_unit_cache = {}


def _unit_amplitude(kind):
    """Normalizing constant of the unit-radius density."""
    if kind == "disk_uniform":
        return 1.0 / math.pi
    if "bump_amp" not in _unit_cache:
        mass = adaptive_quad(
            lambda r: _bump_profile(r) * r, 0.0, 1.0, _BUMP_QUAD
        )
        _unit_cache["bump_amp"] = 1.0 / (2.0 * math.pi * mass)
    return _unit_cache["bump_amp"]


def _unit_log_energy(kind):
    """E(phi) = int int phi(z) phi(z') log|z - z'| for the unit radius.

    For radial densities the angular average of log|z - z'| is
    log max(|z|, |z'|), which collapses the 4-dimensional integral to
    2 * int m(r) log(r) M(r) dr with m the radial mass density and M its
    primitive.  The uniform disk has the closed form -1/4.
    """
    if kind == "disk_uniform":
        return -0.25
    if "bump_energy" not in _unit_cache:
        amp = _unit_amplitude("smooth_bump")

        def radial_mass(r):
            return 2.0 * math.pi * amp * _bump_profile(r) * r

        deg = 120
        nodes = np.cos(math.pi * (np.arange(deg + 1) + 0.5) / (deg + 1))
        r_nodes = 0.5 * (nodes + 1.0)
        coef = np.polynomial.chebyshev.chebfit(nodes, radial_mass(r_nodes), deg)
        coef_int = np.polynomial.chebyshev.chebint(coef, scl=0.5)

        def primitive(r):
            x = 2.0 * np.asarray(r) - 1.0
            return np.polynomial.chebyshev.chebval(x, coef_int) - \
                np.polynomial.chebyshev.chebval(-1.0, coef_int)

        def integrand(r):
            r = np.asarray(r)
            return radial_mass(r) * np.log(r) * primitive(r)

        _unit_cache["bump_energy"] = 2.0 * adaptive_quad(
            integrand, 1e-14, 1.0, _BUMP_QUAD, seeds=(0.25, 0.5, 0.75)
        )
    return _unit_cache["bump_energy"]


def mollifier_density(spec, pts):
    """Density of the mollifier at planar points (..., 2); integrates to 1."""
    pts = np.asarray(pts, dtype=np.float64)
    r = np.sqrt(np.sum(pts * pts, axis=-1)) / spec.radius
    amp = _unit_amplitude(spec.kind) / spec.radius ** 2
    if spec.kind == "disk_uniform":
        return np.where(r < 1.0, amp, 0.0)
    return amp * _bump_profile(r)


def mollifier_log_energy(spec):
    """Logarithmic self-energy; scales as E(R) = E(1) + log R."""
    return _unit_log_energy(spec.kind) + math.log(spec.radius)


def lambda_from_beta(beta, spec):
    """Pair strength matching contact scale beta for this mollifier."""
    if not (beta > 0.0 and math.isfinite(beta)):
        raise DomainError("lambda_from_beta requires beta > 0")
    return 0.5 * math.log(beta) - math.log(2.0) + EULER_GAMMA + \
        mollifier_log_energy(spec)


def beta_from_lambda(lam, spec):
    """Inverse of lambda_from_beta."""
    if not math.isfinite(lam):
        raise DomainError("beta_from_lambda requires finite lambda")
    return math.exp(2.0 * (lam + math.log(2.0) - EULER_GAMMA -
                           mollifier_log_energy(spec)))


@dataclass(frozen=True)
class CouplingParams:
    """Per-pair coupling of an N-particle delta gas.

    ``betas``, ``lambdas`` and ``weights`` are indexed like
    geometry.enumerate_pairs(n_particles).  The two coupling scales are
    stored together and must agree through the mollifier relation.
    """

    n_particles: int
    betas: np.ndarray
    lambdas: np.ndarray
    weights: np.ndarray
    mollifier: MollifierSpec = DEFAULT_MOLLIFIER
    pairs: tuple = field(init=False)

    def __post_init__(self):
        pairs = tuple(geometry.enumerate_pairs(self.n_particles))
        object.__setattr__(self, "pairs", pairs)
        p = len(pairs)
        for name in ("betas", "lambdas", "weights"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.shape == ():
                arr = np.full(p, float(arr))
            if arr.shape != (p,):
                raise DomainError(f"{name} must have one entry per pair ({p})")
            object.__setattr__(self, name, arr)
        if np.any(self.betas <= 0) or not np.all(np.isfinite(self.betas)):
            raise DomainError("betas must be positive and finite")
        if np.any(self.weights <= 0) or not np.all(np.isfinite(self.weights)):
            raise DomainError("weights must be positive and finite")
        if not np.all(np.isfinite(self.lambdas)):
            raise DomainError("lambdas must be finite")
        for b, lam in zip(self.betas, self.lambdas):
            if abs(lam - lambda_from_beta(b, self.mollifier)) > 1e-10:
                raise DomainError(
                    "beta and lambda disagree through the mollifier relation"
                )
        object.__setattr__(
            self, "_pair_slot", {pair: k for k, pair in enumerate(pairs)}
        )

    @classmethod
    def from_betas(cls, n_particles, betas, weights=1.0,
                   mollifier=DEFAULT_MOLLIFIER):
        betas = np.atleast_1d(np.asarray(betas, dtype=np.float64))
        if betas.shape == (1,):
            betas = np.full(len(geometry.enumerate_pairs(n_particles)),
                            betas[0])
        lams = np.array([lambda_from_beta(b, mollifier) for b in betas])
        return cls(n_particles, betas, lams, np.asarray(weights), mollifier)

    @classmethod
    def from_lambdas(cls, n_particles, lambdas, weights=1.0,
                     mollifier=DEFAULT_MOLLIFIER):
        lambdas = np.atleast_1d(np.asarray(lambdas, dtype=np.float64))
        if lambdas.shape == (1,):
            lambdas = np.full(len(geometry.enumerate_pairs(n_particles)),
                              lambdas[0])
        betas = np.array([beta_from_lambda(v, mollifier) for v in lambdas])
        return cls(n_particles, betas, lambdas, np.asarray(weights), mollifier)

    def slot(self, pair):
        return self._pair_slot[pair]

    def beta_for(self, pair):
        return float(self.betas[self.slot(pair)])

    def weight_for(self, pair):
        return float(self.weights[self.slot(pair)])


def _as_batch_observable(f):
    """Wrap a scalar observable so it maps (k, N, 2) -> (k,)."""

    def batched(states):
        try:
            probe = f(states)
            arr = np.asarray(probe, dtype=np.float64)
        except Exception:
            arr = None
        if arr is not None and arr.shape == (states.shape[0],):
            return arr
        return np.array([float(f(s)) for s in states])

    return batched


def occupation_fk_estimate(coupling, z0, t, f, eps, h, n_paths, seed,
                           threads=1):
    """Occupation-exponential estimate of the semigroup at one eps.

    Simulates the free flow with exact Gaussian steps of size <= h,
    accumulates the mollified pair occupation integrals by the midpoint
    rule, exponentiates once per path, and averages exp * f(final state).
    Requires h <= eps^2 / 20.
    """
    z0 = geometry.ensure_config(z0, coupling.n_particles)
    if not isinstance(geometry.classify_config(z0), geometry.Separated):
        raise DomainError("initial configuration must be separated")
    if not (0.0 < eps < 1.0):
        raise DomainError("eps must lie in (0, 1)")
    if not (h > 0.0 and h <= eps * eps / STEP_RATIO * (1.0 + 1e-12)):
        raise DomainError("step must satisfy h <= eps^2 / 20")
    if not t > 0.0:
        raise DomainError("t must be positive")

    n_steps = max(1, int(math.ceil(t / h - 1e-9)))
    h_eff = t / n_steps
    ell = math.log(1.0 / eps)
    strength = 2.0 * math.pi / ell + 2.0 * math.pi * coupling.lambdas / ell ** 2
    coef = strength * h_eff / eps ** 2
    hi_idx = np.array([p.hi - 1 for p in coupling.pairs], dtype=np.int32)
    lo_idx = np.array([p.lo - 1 for p in coupling.pairs], dtype=np.int32)
    amp = _unit_amplitude(coupling.mollifier.kind) / coupling.mollifier.radius ** 2
    kind_code = 0 if coupling.mollifier.kind == "smooth_bump" else 1
    f_batch = _as_batch_observable(f)

    def values(chunk_index, count):
        expo, states = backend.occupation_chunk(
            z0, hi_idx, lo_idx, coef, 1.0 / eps, kind_code,
            coupling.mollifier.radius, amp, n_steps, h_eff,
            count, chunk_index, seed,
        )
        return np.exp(expo) * f_batch(states)

    return run_chunked(values, n_paths, OCCUPATION_CHUNK, seed, threads)


def epsilon_sweep(coupling, z0, t, f, eps_list, n_paths, seed, h_list=None,
                  threads=1):
    """Occupation estimates along a mollification schedule.

    Steps default to h = eps^2 / 20.  All rows reuse the same seed, but a
    path's draws are addressed by step index and the rows use different
    step counts, so the rows decorrelate and behave as independent
    estimates.  Returns one dict per eps with keys eps, h, mean, stderr,
    n, seed, lambda, beta.
    """
    if h_list is None:
        h_list = [e * e / STEP_RATIO for e in eps_list]
    if len(h_list) != len(eps_list):
        raise DomainError("h_list must match eps_list")
    rows = []
    for eps, h in zip(eps_list, h_list):
        est = occupation_fk_estimate(
            coupling, z0, t, f, eps, h, n_paths, seed, threads
        )
        rows.append({
            "eps": eps,
            "h": h,
            "mean": est.mean,
            "stderr": est.stderr,
            "n": est.n_samples,
            "seed": est.seed,
            "lambda": float(coupling.lambdas[0]),
            "beta": float(coupling.betas[0]),
        })
    return rows
