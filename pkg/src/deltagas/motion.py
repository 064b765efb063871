"""Pair-attraction motion: drift field, paths, and additive functionals.

The skew-product description of the conditioned gas drives each pair's
relative coordinate by the logarithmic gradient of a weighted Macdonald
potential.  With hat K_1(x) = x K_1(x) and the pair gap Z_j in complex
form, the drift of the relative coordinate of pair i is

    -(1/2) sum_j (sigma_i . sigma_j) [w_j hat K_1(sqrt(2 b_j)|Z_j|)
          / sum_k w_k K_0(sqrt(2 b_k)|Z_k|)] / conj(Z_j),

and its lift to particle coordinates is divergence-consistent: incidence
contractions recover pair drifts and the total drift sums to zero.  The
additive functional splits into a local-time part (ring) and an absolutely
continuous part (bar); both are evaluated on discrete paths with the
left-endpoint rule, the local time increments being caller-supplied data.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import geometry
from .driver import PLAIN_CHUNK, Estimate, run_chunked
from .rng import DOMAIN_MOTION, DOMAIN_RESTRICTED, DrawStream, block_normals
from .specfun import (
    DomainError,
    QuadratureSpec,
    adaptive_quad,
    macdonald_k,
    k_hat,
    s_beta_time_integral,
)

SQRT2 = math.sqrt(2.0)


def _pair_gaps_complex(coupling, z):
    """Complex relative coordinates of every pair, in pair order."""
    w = geometry.to_complex(z)
    return np.array([
        (w[p.hi - 1] - w[p.lo - 1]) / SQRT2 for p in coupling.pairs
    ])


def _potential_parts(coupling, gaps):
    radii = np.abs(gaps)
    if np.any(radii == 0.0):
        raise DomainError("drift is singular at a collapsed pair")
    args = np.sqrt(2.0 * coupling.betas) * radii
    k0 = macdonald_k(0, args)
    k1_hat = args * macdonald_k(1, args)
    denom = float(np.sum(coupling.weights * k0))
    return k0, k1_hat, denom


def pair_drift(coupling, z, pair):
    """Drift of the relative coordinate of ``pair``, as a complex number."""
    z = geometry.ensure_config(z, coupling.n_particles)
    pair.validate(coupling.n_particles)
    gaps = _pair_gaps_complex(coupling, z)
    _, k1_hat, denom = _potential_parts(coupling, gaps)
    out = 0.0 + 0.0j
    for j, other in enumerate(coupling.pairs):
        dot = geometry.sigma_dot(pair, other)
        if dot == 0:
            continue
        out -= 0.5 * dot * coupling.weights[j] * k1_hat[j] / denom \
            / np.conj(gaps[j])
    return complex(out)


def particle_drift(coupling, z):
    """Drift lifted to particle coordinates, one complex entry per particle.

    Satisfies sigma_i . b / sqrt(2) = pair_drift(i) for every pair and
    sum_k b_k = 0.
    """
    z = geometry.ensure_config(z, coupling.n_particles)
    gaps = _pair_gaps_complex(coupling, z)
    _, k1_hat, denom = _potential_parts(coupling, gaps)
    b = np.zeros(coupling.n_particles, dtype=np.complex128)
    for j, pair in enumerate(coupling.pairs):
        coefficient = coupling.weights[j] * k1_hat[j] / denom \
            / (SQRT2 * np.conj(gaps[j]))
        b[pair.hi - 1] -= coefficient
        b[pair.lo - 1] += coefficient
    return b


@dataclass(frozen=True)
class PathSample:
    """Discrete Euler path of the interacting motion."""

    times: np.ndarray
    states: np.ndarray
    stopped: bool
    seed: int


def sample_path(coupling, z0, t_end, h, seed, with_drift=True,
                eta_stop=1e-3, path_index=0):
    """Euler path from z0 with exact Gaussian increments.

    Stops early (stopped=True) as soon as any pair gap falls below
    ``eta_stop``, since the drift blows up at collisions and the Euler
    step is no longer meaningful there.
    """
    z0 = geometry.ensure_config(z0, coupling.n_particles)
    if not (t_end > 0 and h > 0 and h <= t_end):
        raise DomainError("need 0 < h <= t_end")
    if not eta_stop > 0:
        raise DomainError("eta_stop must be positive")
    n = coupling.n_particles
    n_steps = max(1, int(math.ceil(t_end / h - 1e-9)))
    h_eff = t_end / n_steps
    times = [0.0]
    states = [z0.copy()]
    z = z0.copy()
    stopped = False
    root_h = math.sqrt(h_eff)
    for step in range(n_steps):
        gaps = np.array([
            np.hypot(*(z[p.hi - 1] - z[p.lo - 1])) for p in coupling.pairs
        ])
        if np.min(gaps) <= eta_stop:
            stopped = True
            break
        if with_drift:
            b = particle_drift(coupling, z)
            z = z + h_eff * np.column_stack([b.real, b.imag])
        gx, gy = block_normals(
            seed, DOMAIN_MOTION, 0, np.uint32(path_index),
            (step * n + np.arange(n)).astype(np.uint32),
        )
        z = z + root_h * np.column_stack([gx, gy])
        times.append((step + 1) * h_eff)
        states.append(z.copy())
    return PathSample(
        times=np.array(times), states=np.array(states), stopped=stopped,
        seed=int(seed),
    )


# ---------------------------------------------------------------------------
# additive functionals on discrete paths

def _check_path_arrays(coupling, times, states, dl=None):
    times = np.asarray(times, dtype=np.float64)
    states = np.asarray(states, dtype=np.float64)
    if times.ndim != 1 or len(times) < 2:
        raise DomainError("need at least two path times")
    if np.any(np.diff(times) <= 0):
        raise DomainError("path times must increase strictly")
    if states.shape != (len(times), coupling.n_particles, 2):
        raise DomainError("states must be (len(times), N, 2)")
    if dl is not None:
        dl = np.asarray(dl, dtype=np.float64)
        if dl.shape != (len(times) - 1,):
            raise DomainError("dl must hold one increment per step")
        if np.any(dl < 0):
            raise DomainError("local time increments must be nonnegative")
    return times, states, dl


def _k0_matrix(coupling, states):
    """K_0(sqrt(2 b_j) |Z_j|) at every stored state, shape (len, P)."""
    gaps = np.empty((states.shape[0], len(coupling.pairs)))
    for j, p in enumerate(coupling.pairs):
        d = (states[:, p.hi - 1] - states[:, p.lo - 1]) / SQRT2
        gaps[:, j] = np.hypot(d[:, 0], d[:, 1])
    if np.any(gaps == 0.0):
        raise DomainError("additive functionals need separated path states")
    args = np.sqrt(2.0 * coupling.betas)[None, :] * gaps
    return macdonald_k(0, args.ravel()).reshape(args.shape)


def a_ring(coupling, times, states, pair, dl):
    """Local-time part: sum_k dl_k sum_{j != i} 2 (w_j / w_i) K0_j(t_k)."""
    times, states, dl = _check_path_arrays(coupling, times, states, dl)
    pair.validate(coupling.n_particles)
    i = coupling.slot(pair)
    k0 = _k0_matrix(coupling, states[:-1])
    w = coupling.weights
    cross = 2.0 * (k0 @ w - k0[:, i] * w[i]) / w[i]
    return float(np.sum(cross * dl))


def a_bar(coupling, times, states):
    """Absolutely continuous part, left-endpoint rule.

    Integrand is the weighted mean of beta_j against w_j K0_j at the
    current state; for equal betas it is identically beta and the rule
    is exact.
    """
    times, states, _ = _check_path_arrays(coupling, times, states)
    k0 = _k0_matrix(coupling, states[:-1])
    w = coupling.weights
    num = k0 @ (coupling.betas * w)
    den = k0 @ w
    return float(np.sum(np.diff(times) * (num / den)))


@dataclass(frozen=True)
class AFunctionalValue:
    ring: float
    bar: float
    total: float


def a_functional(coupling, times, states, pair, dl):
    """Both parts of the additive functional; total = ring + bar."""
    ring = a_ring(coupling, times, states, pair, dl)
    bar = a_bar(coupling, times, states)
    return AFunctionalValue(ring=ring, bar=bar, total=ring + bar)


def a_i_functional(coupling, times, states, pair, dl):
    """Centered functional a_i = ring + bar - beta_i * elapsed."""
    value = a_functional(coupling, times, states, pair, dl)
    i = coupling.slot(pair)
    elapsed = float(times[-1] - times[0])
    return value.total - float(coupling.betas[i]) * elapsed


def _endpoint_ratio(coupling, state, pair, collapse_tol):
    gap = float(np.hypot(*(state[pair.hi - 1] - state[pair.lo - 1])))
    if gap <= collapse_tol:
        return 1.0
    gaps = _pair_gaps_complex(coupling, state)
    k0, _, denom = _potential_parts(coupling, gaps)
    i = coupling.slot(pair)
    return float(coupling.weights[i] * k0[i] / denom)


def girsanov_factor(coupling, times, states, pair, dl, collapse_tol=1e-9):
    """Change-of-measure factor along a discrete path for base pair i.

    ratio(start) * exp(-a_i) / ratio(end), where ratio is the i-share of
    the weighted Macdonald potential; at a collapsed endpoint the share is
    taken as 1 (the potential concentrates on the collapsed pair).
    """
    times, states, dl = _check_path_arrays(coupling, times, states, dl)
    pair.validate(coupling.n_particles)
    a_i = a_i_functional(coupling, times, states, pair, dl)
    start = _endpoint_ratio(coupling, states[0], pair, collapse_tol)
    end = _endpoint_ratio(coupling, states[-1], pair, collapse_tol)
    return start * math.exp(-a_i) / end


# ---------------------------------------------------------------------------
# two-particle closed-form routes

def one_delta_restricted_expectation(beta, z0_rel, t, g, n_samples, seed,
                                     threads=1):
    """E[g(Z_t); no contact before t] for a single free pair gap.

    Killing the gap at its contact time weights the free Gaussian endpoint
    by e^(-beta t) K_0(sqrt(2 beta)|Z_t|) / K_0(sqrt(2 beta)|z0|); the
    estimate averages that weight times g over exact Gaussian endpoints.
    ``g`` maps planar points (k, 2) to (k,).
    """
    if not (beta > 0 and t > 0):
        raise DomainError("need beta > 0 and t > 0")
    z0_rel = np.asarray(z0_rel, dtype=np.float64)
    r0 = float(np.hypot(z0_rel[0], z0_rel[1]))
    if r0 == 0.0:
        raise DomainError("z0_rel must be nonzero")
    scale = math.sqrt(2.0 * beta)
    norm = macdonald_k(0, scale * r0)
    decay = math.exp(-beta * t)
    root_t = math.sqrt(t)

    def values(chunk_index, count):
        items = np.arange(count, dtype=np.uint32)
        gx, gy = block_normals(seed, DOMAIN_RESTRICTED, chunk_index, items,
                               np.uint32(0))
        pts = np.column_stack([z0_rel[0] + root_t * gx,
                               z0_rel[1] + root_t * gy])
        radii = np.maximum(np.hypot(pts[:, 0], pts[:, 1]), 5e-324)
        return np.asarray(g(pts)) * decay * macdonald_k(0, scale * radii) / norm

    return run_chunked(values, n_samples, PLAIN_CHUNK, seed, threads)


def local_time_expectation(beta, z0_rel, t, h_fn, quad=None, table=None):
    """Expected local-time integral of a single pair gap against h_fn.

    For a separated start this is

        int_0^t P_2s(sqrt 2 z0) / (2 K_0(sqrt(2 b)|z0|))
              int_s^t e^(-b tau) s_beta(tau - s) h(tau) dtau ds,

    and for z0 = 0 the outer layer collapses to
    int_0^t e^(-b tau) s_beta(tau) h(tau) dtau / (4 pi).  The inner
    integrals freeze their integrable short-duration endpoint analytically
    (the running rate integral over [s, s + delta]) and quadrature the
    smooth remainder against the tabulated rate.  ``h_fn`` must accept
    arrays of times.
    """
    if not (beta > 0 and t > 0):
        raise DomainError("need beta > 0 and t > 0")
    quad = quad or QuadratureSpec(abs_tol=1e-12, rel_tol=1e-7)
    if table is None:
        from .series import _rate_table
        table = _rate_table([beta], t)
    z0_rel = np.asarray(z0_rel, dtype=np.float64)
    r2 = float(np.sum(z0_rel * z0_rel))
    inner_quad = QuadratureSpec(abs_tol=quad.abs_tol, rel_tol=quad.rel_tol,
                                max_subdivisions=800)

    def window_integral(s, horizon):
        """int over tau in [s, s+horizon] of e^(-b tau) s_beta(tau-s) h(tau)."""
        if horizon <= 0:
            return 0.0
        delta = 1e-8 * horizon
        head = math.exp(-beta * s) * float(np.asarray(h_fn(np.array([s])))[0]) \
            * s_beta_time_integral(beta, delta)

        def integrand(tau):
            tau = np.atleast_1d(tau)
            v = tau - s
            rate = table.rate_from_log(np.log(beta * v)) / v
            return np.exp(-beta * tau) * rate * np.asarray(h_fn(tau))

        seeds = [s + delta * 10 ** j for j in range(1, 8)
                 if delta * 10 ** j < horizon]
        tail = adaptive_quad(integrand, s + delta, s + horizon, inner_quad,
                             seeds=seeds)
        return head + tail

    if r2 == 0.0:
        return window_integral(0.0, t) / (4.0 * math.pi)

    k0_norm = 2.0 * macdonald_k(0, math.sqrt(2.0 * beta) * math.sqrt(r2))

    def outer(s_arr):
        s_arr = np.atleast_1d(s_arr)
        out = np.empty_like(s_arr)
        for idx, s in enumerate(s_arr):
            gauss = math.exp(-r2 / (2.0 * s)) / (4.0 * math.pi * s)
            out[idx] = gauss * window_integral(s, t - s)
        return out / k0_norm

    return adaptive_quad(outer, 1e-300, t, quad,
                         seeds=(0.25 * t, 0.5 * t, 0.75 * t))
