"""Diagrammatic series route to the delta-gas semigroup.

The semigroup applied to an observable expands over collision diagrams: a
word of pair indices with adjacent letters distinct, each letter carrying a
creation time and a dissolution time, interleaved along [0, t].  Every term
factors into Gaussian transitions (sampled) and scalar factors (weighted):
the free-flow heat kernels, one product-split factor per creation window,
and one contact rate s_beta per contact window.  term_mc estimates a single
term by Monte Carlo; term_quadrature_n2 integrates the two-particle term
deterministically as a cross-check; series_eval sums layers up to a cutoff
and reports a geometric truncation diagnostic.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import backend, geometry
from .driver import DIAGRAM_CHUNK, Estimate, run_chunked
from .geometry import PairIndex
from .mollified import CouplingParams, _as_batch_observable
from .specfun import (
    ContactRateTable,
    DomainError,
    QuadratureSpec,
    adaptive_quad,
    s_beta_time_integral,
)

__all__ = [
    "Diagram", "Estimate", "enumerate_sequences", "term_mc",
    "term_quadrature_n2", "series_eval", "SeriesResult", "TruncationReport",
    "const_one", "gaussian_bump", "box_indicator", "sequence_label",
]


# ---------------------------------------------------------------------------
# observables: callables mapping a batch of configurations (k, N, 2) -> (k,)

def const_one():
    """The constant observable 1."""

    def f(states):
        states = np.asarray(states)
        return np.ones(states.shape[0])

    return f


def gaussian_bump(center, width):
    """exp(-|z - center|^2 / (2 width^2)) over the full configuration."""
    center = np.asarray(center, dtype=np.float64)
    if not width > 0:
        raise DomainError("gaussian_bump needs width > 0")

    def f(states):
        states = np.asarray(states)
        d = states - center
        return np.exp(-np.sum(d * d, axis=(1, 2)) / (2.0 * width * width))

    return f


def box_indicator(lower, upper):
    """Indicator of the axis box [lower, upper] per coordinate."""
    lower = np.asarray(lower, dtype=np.float64)
    upper = np.asarray(upper, dtype=np.float64)
    if np.any(upper <= lower):
        raise DomainError("box_indicator needs upper > lower")

    def f(states):
        states = np.asarray(states)
        ok = np.all((states >= lower) & (states <= upper), axis=(1, 2))
        return ok.astype(np.float64)

    return f


# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Diagram:
    """One collision diagram: pair word plus interleaved time chain.

    Validates 0 < s_1 < tau_1 < s_2 < ... < tau_m < t and that adjacent
    pairs in the word differ.
    """

    sequence: tuple
    creation_times: tuple
    dissolution_times: tuple
    horizon: float

    def __post_init__(self):
        m = len(self.sequence)
        if len(self.creation_times) != m or len(self.dissolution_times) != m:
            raise DomainError("diagram needs one (s, tau) per pair letter")
        if not self.horizon > 0:
            raise DomainError("diagram horizon must be positive")
        for a, b in zip(self.sequence, self.sequence[1:]):
            if a == b:
                raise DomainError("adjacent pairs in a diagram must differ")
        chain = [0.0]
        for s, tau in zip(self.creation_times, self.dissolution_times):
            chain.extend([s, tau])
        chain.append(self.horizon)
        for a, b in zip(chain, chain[1:]):
            if not b > a:
                raise DomainError("diagram times must interleave strictly")

    @property
    def order(self):
        return len(self.sequence)


def enumerate_sequences(n_particles, m):
    """All pair words of length m with adjacent letters distinct.

    Ordered lexicographically against enumerate_pairs; m = 0 yields the
    single empty word.
    """
    if m < 0:
        raise DomainError("word length must be nonnegative")
    pairs = geometry.enumerate_pairs(n_particles)
    words = [()]
    for _ in range(m):
        words = [w + (p,) for w in words for p in pairs
                 if not w or w[-1] != p]
    return words


def sequence_label(sequence):
    """Dash-joined compact form of a pair word: ((2,1),(3,2)) -> '21-32'."""
    return "-".join(f"{p.hi}{p.lo}" for p in sequence)


@lru_cache(maxsize=8)
def _cached_table(y_ceil):
    return ContactRateTable(y_max=y_ceil)


def _rate_table(betas, t):
    y = max(betas) * t
    # quantize the table range so repeated setups share one build
    y_ceil = 2.0 ** math.ceil(math.log2(max(y * 1.05, 1e-6)))
    return _cached_table(y_ceil)


def term_mc(coupling, z0, t, sequence, f, n_samples, seed, threads=1):
    """Monte Carlo estimate of one series term.

    ``sequence`` is a word of PairIndex with adjacent letters distinct (an
    empty word gives the free m = 0 term).  The start configuration must be
    separated.  Returns an Estimate of E[weight * f(final)].
    """
    z0 = geometry.ensure_config(z0, coupling.n_particles)
    if not isinstance(geometry.classify_config(z0), geometry.Separated):
        raise DomainError("term_mc requires a separated start configuration")
    if not t > 0:
        raise DomainError("t must be positive")
    sequence = tuple(sequence)
    for p in sequence:
        p.validate(coupling.n_particles)
    for a, b in zip(sequence, sequence[1:]):
        if a == b:
            raise DomainError("adjacent pairs in the word must differ")
    hi_idx = np.array([p.hi - 1 for p in sequence], dtype=np.int32)
    lo_idx = np.array([p.lo - 1 for p in sequence], dtype=np.int32)
    win_beta = np.array([coupling.beta_for(p) for p in sequence])
    table = _rate_table(coupling.betas, t) if len(sequence) else None
    f_batch = _as_batch_observable(f)

    def values(chunk_index, count):
        w, states = backend.diagram_chunk(
            z0, hi_idx, lo_idx, win_beta, t, count, chunk_index, seed, table
        )
        return w * f_batch(states)

    return run_chunked(values, n_samples, DIAGRAM_CHUNK, seed, threads)


def term_quadrature_n2(beta, z0_rel, t, quad=None):
    """Two-particle single-window term for f = 1, by nested quadrature.

    Equals int_0^t P_2s(sqrt 2 z0_rel) * int_0^(t-s) s_beta(v) dv ds; the
    inner time integral is evaluated in its closed single-integral form,
    the outer one adaptively.  Independent of the sampling machinery.
    """
    if not (beta > 0 and t > 0):
        raise DomainError("term_quadrature_n2 requires beta > 0 and t > 0")
    z0_rel = np.asarray(z0_rel, dtype=np.float64)
    r2 = float(np.sum(z0_rel * z0_rel))
    if r2 == 0.0:
        raise DomainError("z0_rel must be nonzero (separated start)")
    quad = quad or QuadratureSpec(abs_tol=1e-12, rel_tol=1e-8)
    inner_quad = QuadratureSpec(abs_tol=quad.abs_tol, rel_tol=quad.rel_tol)

    def outer(s_arr):
        s_arr = np.atleast_1d(s_arr)
        out = np.empty_like(s_arr)
        for i, s in enumerate(s_arr):
            gauss = math.exp(-r2 / (2.0 * s)) / (4.0 * math.pi * s)
            out[i] = gauss * s_beta_time_integral(beta, t - s, inner_quad)
        return out

    return adaptive_quad(outer, 1e-300, t, quad,
                         seeds=(0.25 * t, 0.5 * t, 0.75 * t))


@dataclass(frozen=True)
class TruncationReport:
    """Geometric tail diagnostic of a truncated layer sum."""

    last_layer: float
    previous_layer: float
    ratio: float
    tail_bound: float


@dataclass(frozen=True)
class SeriesResult:
    total: Estimate
    terms: list
    truncation: TruncationReport


def series_eval(coupling, z0, t, f, m_max, n_samples, seed, threads=1):
    """Sum the diagram layers m = 0..m_max by Monte Carlo.

    Terms use disjoint stream namespaces derived from one root seed, so
    their errors combine in quadrature.  Returns the summed Estimate, the
    per-term rows (m, sequence, mean, stderr, n, seed), and a geometric
    truncation bound from the last two layer magnitudes.
    """
    if m_max < 0:
        raise DomainError("m_max must be nonnegative")
    rows = []
    total_mean = 0.0
    total_var = 0.0
    layer_abs = []
    term_index = 0
    n_total = 0
    for m in range(m_max + 1):
        layer = 0.0
        for word in enumerate_sequences(coupling.n_particles, m):
            est = _term_in_namespace(coupling, z0, t, word, f, n_samples,
                                     seed, term_index, threads)
            rows.append({
                "m": m,
                "sequence": sequence_label(word),
                "mean": est.mean,
                "stderr": est.stderr,
                "n": est.n_samples,
                "seed": est.seed,
            })
            total_mean += est.mean
            total_var += est.stderr ** 2
            layer += abs(est.mean)
            term_index += 1
            n_total = max(n_total, est.n_samples)
        layer_abs.append(layer)
    if len(layer_abs) >= 2 and layer_abs[-2] > 0:
        ratio = layer_abs[-1] / layer_abs[-2]
        tail = layer_abs[-1] * ratio / (1.0 - ratio) if ratio < 1 else math.inf
    else:
        ratio = math.nan
        tail = math.inf if layer_abs[-1] > 0 else 0.0
    total = Estimate(mean=total_mean, stderr=math.sqrt(total_var),
                     n_samples=n_total, seed=int(seed))
    return SeriesResult(
        total=total,
        terms=rows,
        truncation=TruncationReport(
            last_layer=layer_abs[-1],
            previous_layer=layer_abs[-2] if len(layer_abs) >= 2 else math.nan,
            ratio=ratio,
            tail_bound=tail,
        ),
    )


# each term gets 2^20 chunk indices of its own inside the shared stream space
_TERM_CHUNK_SPAN = 1 << 20


def _term_in_namespace(coupling, z0, t, word, f, n_samples, seed, term_index,
                       threads):
    z0 = geometry.ensure_config(z0, coupling.n_particles)
    if not isinstance(geometry.classify_config(z0), geometry.Separated):
        raise DomainError("series_eval requires a separated start")
    hi_idx = np.array([p.hi - 1 for p in word], dtype=np.int32)
    lo_idx = np.array([p.lo - 1 for p in word], dtype=np.int32)
    win_beta = np.array([coupling.beta_for(p) for p in word])
    table = _rate_table(coupling.betas, t) if len(word) else None
    f_batch = _as_batch_observable(f)
    base = term_index * _TERM_CHUNK_SPAN

    def values(chunk_index, count):
        w, states = backend.diagram_chunk(
            z0, hi_idx, lo_idx, win_beta, t, count, base + chunk_index,
            seed, table
        )
        return w * f_batch(states)

    return run_chunked(values, n_samples, DIAGRAM_CHUNK, seed, threads)
