"""Special functions for the planar delta-gas lab.

Everything here is self-contained on top of numpy: a Lanczos gamma, the
Macdonald (modified Bessel second kind) functions of order 0 and 1, an
embedded-rule adaptive integrator, and the two-sided contact rate

    s_beta(tau) = 4 pi * int_0^inf beta^u tau^(u-1) / Gamma(u) du,

the time kernel a pair accumulates while its two particles ride a single
contact window.  The rate scales as tau * s_beta(tau) = G(beta * tau) for a
single smooth G, which this module also tabulates for the samplers.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

EULER_GAMMA = 0.5772156649015328606
FOUR_PI = 4.0 * math.pi

# tau below this is clamped before evaluating the contact rate
TAU_FLOOR = 1e-12

# gamma overflows float64 just above 171; macdonald_k underflows near 745
GAMMA_OVERFLOW_ARG = 170.0
MACDONALD_UNDERFLOW_ARG = 700.0


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class ToleranceError(RuntimeError):
    """Adaptive refinement exhausted its budget before reaching tolerance."""


class UnderflowWarning(RuntimeWarning):
    """Result is below (or near) the smallest normal float64."""


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerance budget for the adaptive integrator."""

    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_subdivisions: int = 400

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise DomainError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise DomainError("max_subdivisions must be at least 1")


DEFAULT_QUAD = QuadratureSpec()

# ---------------------------------------------------------------------------
# gamma

_LANCZOS_G = 7.0
_LANCZOS_C = np.array([
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
])

# Maclaurin coefficients of 1/Gamma(u) = sum_k a_k u^k, k = 1..9.  Used for
# the deep small-argument tail of the contact rate where the integral
# 4 pi * int e^(-lam u) / Gamma(u) du admits the Watson expansion
# 4 pi * sum_k a_k k! / lam^(k+1).
RGAMMA_TAYLOR = np.array([
    1.0,
    0.57721566490153287,
    -0.6558780715202539,
    -0.042002635034095237,
    0.16653861138229148,
    -0.042197734555544333,
    -0.009621971527876973,
    0.0072189432466631,
    -0.0011651675918590652,
])


def log_gamma(u):
    """log Gamma(u) for u > 0, scalar or array, accurate to ~1e-13 relative.

    Arguments below 0.5 are lifted once through the recurrence
    Gamma(u) = Gamma(u + 1) / u, which keeps the Lanczos sum on its
    well-conditioned range.
    """
    u = np.asarray(u, dtype=np.float64)
    if np.any(u <= 0.0):
        raise DomainError("log_gamma requires u > 0")
    small = u < 0.5
    base = np.where(small, u + 1.0, u)
    acc = np.full(base.shape, _LANCZOS_C[0])
    for i in range(1, len(_LANCZOS_C)):
        acc = acc + _LANCZOS_C[i] / (base + (i - 1.0))
    tt = base + (_LANCZOS_G - 0.5)
    out = 0.5 * math.log(2.0 * math.pi) + (base - 0.5) * np.log(tt) - tt + np.log(acc)
    out = out - np.where(small, np.log(u, where=small, out=np.zeros(u.shape)), 0.0)
    if out.ndim == 0:
        return float(out)
    return out


def gamma_fn(u):
    """Gamma(u) for 0 < u <= 170; raises OverflowError past float64 range."""
    u_arr = np.asarray(u, dtype=np.float64)
    if np.any(u_arr <= 0.0):
        raise DomainError("gamma_fn requires u > 0")
    if np.any(u_arr > GAMMA_OVERFLOW_ARG):
        raise OverflowError(
            f"gamma_fn overflows float64 for u > {GAMMA_OVERFLOW_ARG}"
        )
    out = np.exp(log_gamma(u_arr))
    if out.ndim == 0:
        return float(out)
    return out


# ---------------------------------------------------------------------------
# Macdonald functions K_0, K_1

_K_SERIES_TERMS = 20
_K_SWITCH = 2.0
# Gauss-Hermite rule; via u = s^2 it integrates the exponential-weighted
# half-line forms of K_0 and K_1 to ~1e-13 relative down to the switch point.
_HERM_X, _HERM_W = np.polynomial.hermite.hermgauss(64)


def _k_small(nu, x):
    """Ascending series, reliable for 0 < x <= 2."""
    q = x * x * 0.25
    lg = np.log(0.5 * x) + EULER_GAMMA
    if nu == 0:
        s_i = np.zeros_like(x)
        s_h = np.zeros_like(x)
        coef = np.ones_like(x)
        harmonic = 0.0
        for k in range(_K_SERIES_TERMS):
            if k > 0:
                coef = coef * q / (k * k)
                harmonic += 1.0 / k
            s_i += coef
            s_h += coef * harmonic
        return -lg * s_i + s_h
    s_i = np.zeros_like(x)
    s_h = np.zeros_like(x)
    coef = np.ones_like(x)
    harmonic = 0.0
    harmonic_next = 1.0
    for k in range(_K_SERIES_TERMS):
        if k > 0:
            coef = coef * q / (k * (k + 1.0))
            harmonic += 1.0 / k
            harmonic_next += 1.0 / (k + 1.0)
        s_i += coef
        s_h += coef * (harmonic + harmonic_next)
    return 1.0 / x + lg * (0.5 * x) * s_i - 0.25 * x * s_h


def _k_large(nu, x):
    """Exponentially weighted quadrature form, reliable for x >= 2."""
    s2 = _HERM_X * _HERM_X
    arg = 1.0 + s2[:, None] / (2.0 * x[None, :])
    if nu == 0:
        j = _HERM_W @ (arg ** -0.5)
        return np.exp(-x) * j / np.sqrt(2.0 * x)
    j = (_HERM_W * s2) @ (arg ** 0.5)
    return np.exp(-x) * j * np.sqrt(2.0 / x)


def macdonald_k(nu, x):
    """K_nu(x) for nu in {0, 1} and x > 0, scalar or array.

    Positive and strictly decreasing in x.  For x > 700 the result sits in
    the subnormal range (or is a clean zero); an UnderflowWarning is issued
    and the exponentially tiny value is returned as-is.
    """
    if nu not in (0, 1):
        raise DomainError("macdonald_k supports orders 0 and 1 only")
    x_arr = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if np.any(x_arr <= 0.0) or not np.all(np.isfinite(x_arr)):
        raise DomainError("macdonald_k requires finite x > 0")
    if np.any(x_arr > MACDONALD_UNDERFLOW_ARG):
        warnings.warn(
            f"macdonald_k underflows toward zero for x > {MACDONALD_UNDERFLOW_ARG}",
            UnderflowWarning,
            stacklevel=2,
        )
    out = np.empty_like(x_arr)
    small = x_arr <= _K_SWITCH
    if np.any(small):
        out[small] = _k_small(nu, x_arr[small])
    if np.any(~small):
        out[~small] = _k_large(nu, x_arr[~small])
    if np.isscalar(x) or np.asarray(x).ndim == 0:
        return float(out[0])
    return out


def k_hat(nu, x):
    """x^nu K_nu(x): the collision-scale form, bounded near the origin."""
    if nu not in (0, 1):
        raise DomainError("k_hat supports orders 0 and 1 only")
    base = macdonald_k(nu, x)
    if nu == 0:
        return base
    return np.asarray(x, dtype=np.float64) * base if not np.isscalar(base) else float(x) * base


# ---------------------------------------------------------------------------
# adaptive integration (embedded Gauss pair)

_GL10_X, _GL10_W = np.polynomial.legendre.leggauss(10)
_GL20_X, _GL20_W = np.polynomial.legendre.leggauss(20)


def _segment(f, a, b):
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    coarse = half * float(_GL10_W @ f(mid + half * _GL10_X))
    fine = half * float(_GL20_W @ f(mid + half * _GL20_X))
    return fine, abs(fine - coarse)


def adaptive_quad(f, a, b, quad=DEFAULT_QUAD, seeds=()):
    """Integrate vectorized ``f`` over [a, b] to the requested tolerance.

    ``seeds`` lists interior break points (the caller's knowledge of modes
    or kinks).  Refinement bisects the segment with the largest embedded
    error estimate; running out of budget raises ToleranceError.
    """
    if not b > a:
        raise DomainError("adaptive_quad requires b > a")
    points = [a] + sorted(p for p in seeds if a < p < b) + [b]
    segs = []
    for lo, hi in zip(points[:-1], points[1:]):
        val, err = _segment(f, lo, hi)
        segs.append((err, lo, hi, val))
    splits = 0
    while True:
        total = math.fsum(s[3] for s in segs)
        err_total = math.fsum(s[0] for s in segs)
        if err_total <= max(quad.abs_tol, quad.rel_tol * abs(total)):
            return total
        if splits >= quad.max_subdivisions:
            raise ToleranceError(
                f"adaptive_quad: {err_total:.3e} absolute error after "
                f"{splits} subdivisions"
            )
        worst = max(range(len(segs)), key=lambda i: segs[i][0])
        _, lo, hi, _ = segs.pop(worst)
        mid = 0.5 * (lo + hi)
        for seg in ((lo, mid), (mid, hi)):
            val, err = _segment(f, *seg)
            segs.append((err, seg[0], seg[1], val))
        splits += 1


# ---------------------------------------------------------------------------
# contact rate

def _rate_mode(log_y):
    """Maximizer of u*log(y) - log Gamma(u) by golden-section search."""
    phi = lambda u: u * log_y - log_gamma(u)
    hi = 1.0
    while phi(2.0 * hi) > phi(hi):
        hi *= 2.0
        if hi > 1e12:
            raise ToleranceError("contact-rate mode search diverged")
    lo = 1e-12
    inv_gr = (math.sqrt(5.0) - 1.0) / 2.0
    c = hi - inv_gr * (hi - lo)
    d = lo + inv_gr * (hi - lo)
    while hi - lo > 1e-8 * max(1.0, hi):
        if phi(c) > phi(d):
            hi, d = d, c
            c = hi - inv_gr * (hi - lo)
        else:
            lo, c = c, d
            d = lo + inv_gr * (hi - lo)
    return 0.5 * (lo + hi)


def _rate_u_integral(log_y, shift, quad):
    """4 pi * int_0^inf exp(u log y - log Gamma(u + shift)) du.

    shift = 0 gives tau * s_beta(tau); shift = 1 gives the running time
    integral of the rate.  The integrand is unimodal; the upper limit grows
    by doubling until a one-step decay bound certifies the dropped tail.
    """
    g = lambda u: np.exp(u * log_y - log_gamma(u + shift))
    mode = _rate_mode(log_y) if shift == 0 else max(_rate_mode(log_y), 1e-6)
    peak = float(g(np.asarray(mode)))
    upper = max(4.0 * mode, 8.0)
    while True:
        tail_rate = float(g(np.asarray(upper + 1.0))) / max(float(g(np.asarray(upper))), 5e-324)
        if tail_rate < 0.5:
            tail_bound = float(g(np.asarray(upper))) / (1.0 - tail_rate)
            if tail_bound < 0.01 * max(quad.abs_tol, quad.rel_tol * peak * mode):
                break
        upper *= 2.0
        if upper > 1e15:
            raise ToleranceError("contact-rate tail cutoff diverged")
    val = adaptive_quad(g, 0.0, upper, quad, seeds=(min(mode, upper * 0.5),))
    return FOUR_PI * val


def s_beta(beta, tau, quad=DEFAULT_QUAD):
    """Contact rate s_beta(tau), by direct adaptive quadrature in u.

    tau below 1e-12 is clamped to 1e-12 before evaluation; beta and tau must
    be positive.  This is the reference evaluator; samplers use the
    ContactRateTable built against it.
    """
    if not (beta > 0.0 and math.isfinite(beta)):
        raise DomainError("s_beta requires beta > 0")
    if not (tau > 0.0 and math.isfinite(tau)):
        raise DomainError("s_beta requires tau > 0")
    tau = max(tau, TAU_FLOOR)
    return _rate_u_integral(math.log(beta * tau), 0.0, quad) / tau


def s_beta_time_integral(beta, t_end, quad=DEFAULT_QUAD):
    """int_0^t_end s_beta(v) dv, evaluated in its closed single-integral form.

    Swapping the order of the u and time integrations turns the (integrable)
    short-time singularity of the rate into the smooth integrand
    4 pi (beta t)^u / Gamma(u + 1), which is what gets quadratured here.
    """
    if not (beta > 0.0 and math.isfinite(beta)):
        raise DomainError("s_beta_time_integral requires beta > 0")
    if not (t_end >= 0.0 and math.isfinite(t_end)):
        raise DomainError("s_beta_time_integral requires t_end >= 0")
    if t_end == 0.0:
        return 0.0
    return _rate_u_integral(math.log(beta * t_end), 1.0, quad)


# threshold between the tabulated mid-range and the Watson small-y tail
_TABLE_LOG_LO = math.log(1e-16)
_WATSON_FACT = np.array([math.factorial(k) for k in range(1, 10)], dtype=np.float64)


def _watson_log_rate(log_y):
    """log G(y) for log y < -36.8 via the reciprocal-gamma expansion."""
    lam = -np.asarray(log_y, dtype=np.float64)
    acc = np.zeros_like(lam)
    for k in range(9, 0, -1):
        acc = (acc + RGAMMA_TAYLOR[k - 1] * _WATSON_FACT[k - 1]) / lam
    # acc = sum a_k k! / lam^k; the expansion wants one more power of lam
    return math.log(FOUR_PI) + np.log(acc / lam)


class ContactRateTable:
    """Chebyshev table of log G(y) = log(tau * s_beta(tau)), y = beta * tau.

    Covers log y in [log 1e-16, log y_max] with a degree ~200 fit built from
    the reference quadrature; below the range the Watson expansion takes
    over.  Evaluation accepts log y directly so samplers can weigh contact
    durations far below the float64 underflow line.
    """

    def __init__(self, y_max, degree=200, quad=None):
        if not y_max > 1e-14:
            raise DomainError("ContactRateTable requires y_max > 1e-14")
        quad = quad or QuadratureSpec(abs_tol=1e-12, rel_tol=1e-12)
        self.log_lo = _TABLE_LOG_LO
        self.log_hi = math.log(y_max)
        k = np.arange(degree + 1)
        xk = np.cos(math.pi * (k + 0.5) / (degree + 1))
        ly = 0.5 * (self.log_hi - self.log_lo) * xk + 0.5 * (self.log_hi + self.log_lo)
        vals = np.array([
            math.log(_rate_u_integral(v, 0.0, quad)) for v in ly
        ])
        self.coef = np.polynomial.chebyshev.chebfit(xk, vals, degree)

    def log_rate_from_log(self, log_y):
        """log G at the given log y (scalar or array)."""
        log_y = np.asarray(log_y, dtype=np.float64)
        out = np.empty_like(log_y)
        in_table = log_y >= self.log_lo
        if np.any(log_y > self.log_hi + 1e-9):
            raise DomainError("ContactRateTable evaluated beyond its y_max")
        if np.any(in_table):
            x = (2.0 * log_y[in_table] - (self.log_hi + self.log_lo)) / (
                self.log_hi - self.log_lo
            )
            out[in_table] = np.polynomial.chebyshev.chebval(x, self.coef)
        if np.any(~in_table):
            out[~in_table] = _watson_log_rate(log_y[~in_table])
        return out

    def rate_from_log(self, log_y):
        """G at the given log y."""
        return np.exp(self.log_rate_from_log(log_y))
