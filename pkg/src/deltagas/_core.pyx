# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled implementations of the two hot sampling kernels.

Scalar mirror of deltagas._corepy: identical draw addressing (the Philox
counter layout (block, item, chunk, domain)), identical arithmetic order,
identical outputs up to libm-vs-numpy rounding of log/exp/cos/sin.  The GIL
is released around the sample loops, so the chunked driver's thread pool
parallelizes across chunks.

The Chebyshev coefficients of the contact-rate table are passed in from the
caller; evaluation here is plain Clenshaw plus the reciprocal-gamma tail
below the tabulated range.  The sampler's log y never exceeds
log(beta * t), which the caller's table covers by construction, so no range
check is needed in the loop.
"""

import numpy as np

from libc.math cimport M_E, M_PI, cos, exp, log, sin, sqrt
from libc.stdlib cimport free, malloc

cdef extern from *:
    """
    #include <math.h>
    #include <string.h>

    /* Box-Muller over a strip of uniform pairs.  With glibc's libmvec the
       log/cos/sin run 4-wide (values differ from scalar libm by ~1 ulp);
       otherwise a plain scalar loop.  Either way the build is internally
       deterministic. */
    #if defined(DG_USE_LIBMVEC)
    typedef double dg_v4 __attribute__((vector_size(32)));
    extern dg_v4 _ZGVdN4v_log(dg_v4);
    extern dg_v4 _ZGVdN4v_sin(dg_v4);
    extern dg_v4 _ZGVdN4v_cos(dg_v4);
    static void dg_bm_strip(const double* up, const double* uh,
                            double* gx, double* gy, long n) {
        const double two_pi = 2.0 * M_PI;
        long s = 0;
        for (; s + 4 <= n; s += 4) {
            dg_v4 u, h, r, ang, c, sn, ox, oy;
            memcpy(&u, up + s, 32);
            memcpy(&h, uh + s, 32);
            dg_v4 l = _ZGVdN4v_log(u);
            r[0] = sqrt(-2.0 * l[0]);
            r[1] = sqrt(-2.0 * l[1]);
            r[2] = sqrt(-2.0 * l[2]);
            r[3] = sqrt(-2.0 * l[3]);
            ang = two_pi * h;
            c = _ZGVdN4v_cos(ang);
            sn = _ZGVdN4v_sin(ang);
            ox = r * c;
            oy = r * sn;
            memcpy(gx + s, &ox, 32);
            memcpy(gy + s, &oy, 32);
        }
        for (; s < n; s++) {
            double r = sqrt(-2.0 * log(up[s]));
            double ang = 2.0 * M_PI * uh[s];
            gx[s] = r * cos(ang);
            gy[s] = r * sin(ang);
        }
    }
    #else
    static void dg_bm_strip(const double* up, const double* uh,
                            double* gx, double* gy, long n) {
        long s;
        for (s = 0; s < n; s++) {
            double r = sqrt(-2.0 * log(up[s]));
            double ang = 2.0 * M_PI * uh[s];
            gx[s] = r * cos(ang);
            gy[s] = r * sin(ang);
        }
    }
    #endif
    """
    void dg_bm_strip(const double* up, const double* uh, double* gx,
                     double* gy, long n) nogil

DEF PHILOX_ROUNDS = 10

cdef double TWO_M53 = 1.0 / 9007199254740992.0
cdef double TWO_PI = 2.0 * M_PI
cdef double FOUR_PI = 4.0 * M_PI
cdef double SQRT2 = sqrt(2.0)
cdef double LOG_FOUR_PI = log(4.0 * M_PI)

cdef unsigned int DOMAIN_SERIES = 1
cdef unsigned int DOMAIN_OCCUPATION = 2

# Maclaurin coefficients of 1 / Gamma (orders 1..9) times k!, frozen to the
# same literals the fallback uses.
cdef double[9] RGAMMA_FACT
RGAMMA_FACT[0] = 1.0 * 1.0
RGAMMA_FACT[1] = 0.57721566490153287 * 2.0
RGAMMA_FACT[2] = -0.6558780715202539 * 6.0
RGAMMA_FACT[3] = -0.042002635034095237 * 24.0
RGAMMA_FACT[4] = 0.16653861138229148 * 120.0
RGAMMA_FACT[5] = -0.042197734555544333 * 720.0
RGAMMA_FACT[6] = -0.009621971527876973 * 5040.0
RGAMMA_FACT[7] = 0.0072189432466631 * 40320.0
RGAMMA_FACT[8] = -0.0011651675918590652 * 362880.0


cdef inline void _philox(unsigned int c0, unsigned int c1, unsigned int c2,
                         unsigned int c3, unsigned int k0, unsigned int k1,
                         unsigned int* out) noexcept nogil:
    cdef int r
    cdef unsigned long long p0, p1
    cdef unsigned int hi0, lo0, hi1, lo1
    for r in range(PHILOX_ROUNDS):
        p0 = <unsigned long long> c0 * 0xD2511F53u
        p1 = <unsigned long long> c2 * 0xCD9E8D57u
        hi0 = <unsigned int> (p0 >> 32)
        lo0 = <unsigned int> p0
        hi1 = <unsigned int> (p1 >> 32)
        lo1 = <unsigned int> p1
        c0 = hi1 ^ c1 ^ k0
        c1 = lo1
        c2 = hi0 ^ c3 ^ k1
        c3 = lo0
        k0 = k0 + 0x9E3779B9u
        k1 = k1 + 0xBB67AE85u
    out[0] = c0
    out[1] = c1
    out[2] = c2
    out[3] = c3


cdef inline void _uniforms(unsigned long long seed, unsigned int domain,
                           unsigned int chunk, unsigned int item,
                           unsigned int block, double* u_pos,
                           double* u_half) noexcept nogil:
    cdef unsigned int x[4]
    cdef unsigned long long a, b
    _philox(block, item, chunk, domain,
            <unsigned int> (seed & 0xFFFFFFFFULL),
            <unsigned int> (seed >> 32), x)
    a = (<unsigned long long> x[0] << 32) | x[1]
    b = (<unsigned long long> x[2] << 32) | x[3]
    u_pos[0] = <double> ((a >> 11) + 1) * TWO_M53   # (0, 1]
    u_half[0] = <double> (b >> 11) * TWO_M53        # [0, 1)


cdef inline void _normals(unsigned long long seed, unsigned int domain,
                          unsigned int chunk, unsigned int item,
                          unsigned int block, double* gx,
                          double* gy) noexcept nogil:
    cdef double u_pos, u_half, r, ang
    _uniforms(seed, domain, chunk, item, block, &u_pos, &u_half)
    r = sqrt(-2.0 * log(u_pos))
    ang = TWO_PI * u_half
    gx[0] = r * cos(ang)
    gy[0] = r * sin(ang)


cdef inline double _log_rate(double log_y, const double* cheb,
                             Py_ssize_t ncoef, double log_lo,
                             double log_hi) noexcept nogil:
    cdef double x, b0, b1, b2, lam, acc
    cdef Py_ssize_t k
    if log_y >= log_lo:
        x = (2.0 * log_y - (log_hi + log_lo)) / (log_hi - log_lo)
        b1 = 0.0
        b2 = 0.0
        for k in range(ncoef - 1, 0, -1):
            b0 = 2.0 * x * b1 - b2 + cheb[k]
            b2 = b1
            b1 = b0
        return x * b1 - b2 + cheb[0]
    lam = -log_y
    acc = 0.0
    for k in range(9, 0, -1):
        acc = (acc + RGAMMA_FACT[k - 1]) / lam
    return LOG_FOUR_PI + log(acc / lam)


def philox_probe(unsigned int block, unsigned int item, unsigned int chunk,
                 unsigned int domain, unsigned long long seed):
    """Raw Philox output words at one address (for stream-identity tests)."""
    cdef unsigned int x[4]
    _philox(block, item, chunk, domain,
            <unsigned int> (seed & 0xFFFFFFFFULL),
            <unsigned int> (seed >> 32), x)
    return int(x[0]), int(x[1]), int(x[2]), int(x[3])


def diagram_chunk(double[:, ::1] z0, int[::1] hi_idx, int[::1] lo_idx,
                  double[::1] win_beta, double t, Py_ssize_t count,
                  unsigned int chunk_index, unsigned long long seed,
                  double[::1] cheb, double log_lo, double log_hi,
                  double[::1] out_w, double[:, :, ::1] out_states):
    """Weighted paths of one collision diagram; see the fallback's docstring."""
    cdef Py_ssize_t n = z0.shape[0]
    cdef Py_ssize_t m = hi_idx.shape[0]
    cdef Py_ssize_t ncoef = cheb.shape[0]
    cdef Py_ssize_t i, k, p
    cdef unsigned int block, iu
    cdef int hi, lo
    cdef double w, prev_tau, prev, gap, s, horizon, inv_u, log_y, v
    cdef double u_pos, u_half, gx, gy, dt, root_dt, root_v, half_root
    cdef double dx, dy, sq, meetx, meety, centerx, centery
    cdef double* s_win = <double*> malloc(m * sizeof(double)) if m else NULL
    cdef double* v_win = <double*> malloc(m * sizeof(double)) if m else NULL
    cdef double* log_beta = <double*> malloc(m * sizeof(double)) if m else NULL
    if m and (s_win == NULL or v_win == NULL or log_beta == NULL):
        free(s_win)
        free(v_win)
        free(log_beta)
        raise MemoryError
    for k in range(m):
        log_beta[k] = log(win_beta[k])

    with nogil:
        for i in range(count):
            iu = <unsigned int> i
            for p in range(n):
                out_states[i, p, 0] = z0[p, 0]
                out_states[i, p, 1] = z0[p, 1]
            w = 1.0
            block = 0
            prev_tau = 0.0
            for k in range(m):
                _uniforms(seed, DOMAIN_SERIES, chunk_index, iu, block,
                          &u_pos, &u_half)
                block += 1
                gap = t - prev_tau
                s = prev_tau + u_half * gap
                w *= gap
                horizon = t - s
                inv_u = 1.0 / u_pos
                log_y = log_beta[k] + 1.0 + log(horizon) - inv_u
                w *= exp(_log_rate(log_y, &cheb[0], ncoef, log_lo, log_hi)) \
                    * inv_u * inv_u
                v = M_E * horizon * exp(-inv_u)
                s_win[k] = s
                v_win[k] = v
                prev_tau = s + v

            prev = 0.0
            for k in range(m):
                hi = hi_idx[k]
                lo = lo_idx[k]
                dt = s_win[k] - prev
                root_dt = sqrt(dt)
                for p in range(n):
                    if p == hi or p == lo:
                        continue
                    _normals(seed, DOMAIN_SERIES, chunk_index, iu, block,
                             &gx, &gy)
                    block += 1
                    out_states[i, p, 0] += root_dt * gx
                    out_states[i, p, 1] += root_dt * gy
                dx = out_states[i, hi, 0] - out_states[i, lo, 0]
                dy = out_states[i, hi, 1] - out_states[i, lo, 1]
                sq = dx * dx + dy * dy
                if dt > 0.0:
                    w *= exp(-sq / (4.0 * dt)) / (FOUR_PI * dt)
                else:
                    w *= 0.0
                _normals(seed, DOMAIN_SERIES, chunk_index, iu, block,
                         &gx, &gy)
                block += 1
                half_root = sqrt(0.5 * dt)
                meetx = 0.5 * (out_states[i, hi, 0] + out_states[i, lo, 0]) \
                    + half_root * gx
                meety = 0.5 * (out_states[i, hi, 1] + out_states[i, lo, 1]) \
                    + half_root * gy
                out_states[i, hi, 0] = meetx
                out_states[i, hi, 1] = meety
                out_states[i, lo, 0] = meetx
                out_states[i, lo, 1] = meety
                root_v = sqrt(v_win[k])
                for p in range(n):
                    if p == hi or p == lo:
                        continue
                    _normals(seed, DOMAIN_SERIES, chunk_index, iu, block,
                             &gx, &gy)
                    block += 1
                    out_states[i, p, 0] += root_v * gx
                    out_states[i, p, 1] += root_v * gy
                _normals(seed, DOMAIN_SERIES, chunk_index, iu, block,
                         &gx, &gy)
                block += 1
                centerx = SQRT2 * meetx + root_v * gx
                centery = SQRT2 * meety + root_v * gy
                out_states[i, hi, 0] = centerx / SQRT2
                out_states[i, hi, 1] = centery / SQRT2
                out_states[i, lo, 0] = centerx / SQRT2
                out_states[i, lo, 1] = centery / SQRT2
                prev = s_win[k] + v_win[k]

            dt = t - prev
            root_dt = sqrt(dt)
            for p in range(n):
                _normals(seed, DOMAIN_SERIES, chunk_index, iu, block,
                         &gx, &gy)
                block += 1
                out_states[i, p, 0] += root_dt * gx
                out_states[i, p, 1] += root_dt * gy
            out_w[i] = w

    free(s_win)
    free(v_win)
    free(log_beta)


DEF OCC_STRIP = 64


def occupation_chunk(double[:, ::1] z0, int[::1] hi_idx, int[::1] lo_idx,
                     double[::1] coef, double inv_eps, int kind_code,
                     double radius, double amp, Py_ssize_t n_steps,
                     double h_eff, Py_ssize_t count, unsigned int chunk_index,
                     unsigned long long seed, double[::1] out_expo,
                     double[:, :, ::1] out_states):
    """Euler chunk of the mollified occupation exponents; block = step*N + p.

    Paths run in strips of 64 so every step's Gaussian increments go
    through one batched Box-Muller transform.  Draw addressing is the same
    pure function of (step, particle, path) as in the fallback, so the
    strip layout leaves the streams untouched.
    """
    cdef Py_ssize_t n = z0.shape[0]
    cdef Py_ssize_t n_pairs = hi_idx.shape[0]
    cdef Py_ssize_t start, ns, i, s, step, p, j, base
    cdef double expo, dx, dy, u2, nx, ny
    cdef double root_h = sqrt(h_eff)
    cdef double scale = inv_eps * inv_eps * (1.0 / (radius * radius))
    cdef Py_ssize_t width = OCC_STRIP * n
    cdef double* up = <double*> malloc(width * sizeof(double))
    cdef double* uh = <double*> malloc(width * sizeof(double))
    cdef double* gx = <double*> malloc(width * sizeof(double))
    cdef double* gy = <double*> malloc(width * sizeof(double))
    cdef double* pos = <double*> malloc(2 * width * sizeof(double))
    cdef double* newb = <double*> malloc(2 * n * sizeof(double))
    cdef double* midb = <double*> malloc(2 * n * sizeof(double))
    cdef double* acc = <double*> malloc(OCC_STRIP * sizeof(double))
    if (up == NULL or uh == NULL or gx == NULL or gy == NULL or pos == NULL
            or newb == NULL or midb == NULL or acc == NULL):
        free(up)
        free(uh)
        free(gx)
        free(gy)
        free(pos)
        free(newb)
        free(midb)
        free(acc)
        raise MemoryError

    with nogil:
        for start in range(0, count, OCC_STRIP):
            ns = count - start
            if ns > OCC_STRIP:
                ns = OCC_STRIP
            for s in range(ns):
                acc[s] = 0.0
                for p in range(n):
                    pos[(s * n + p) * 2] = z0[p, 0]
                    pos[(s * n + p) * 2 + 1] = z0[p, 1]
            for step in range(n_steps):
                for s in range(ns):
                    for p in range(n):
                        _uniforms(seed, DOMAIN_OCCUPATION, chunk_index,
                                  <unsigned int> (start + s),
                                  <unsigned int> (step * n + p),
                                  &up[s * n + p], &uh[s * n + p])
                dg_bm_strip(up, uh, gx, gy, ns * n)
                for s in range(ns):
                    base = s * n
                    expo = acc[s]
                    for p in range(n):
                        nx = pos[(base + p) * 2] + root_h * gx[base + p]
                        ny = pos[(base + p) * 2 + 1] + root_h * gy[base + p]
                        newb[2 * p] = nx
                        newb[2 * p + 1] = ny
                        midb[2 * p] = 0.5 * (pos[(base + p) * 2] + nx)
                        midb[2 * p + 1] = 0.5 * (pos[(base + p) * 2 + 1] + ny)
                    for j in range(n_pairs):
                        dx = midb[2 * hi_idx[j]] - midb[2 * lo_idx[j]]
                        dy = midb[2 * hi_idx[j] + 1] - midb[2 * lo_idx[j] + 1]
                        u2 = (dx * dx + dy * dy) * scale
                        if u2 < 1.0:
                            if kind_code == 0:
                                expo += coef[j] * (amp * exp(-1.0 / (1.0 - u2)))
                            else:
                                expo += coef[j] * amp
                    for p in range(n):
                        pos[(base + p) * 2] = newb[2 * p]
                        pos[(base + p) * 2 + 1] = newb[2 * p + 1]
                    acc[s] = expo
            for s in range(ns):
                i = start + s
                out_expo[i] = acc[s]
                for p in range(n):
                    out_states[i, p, 0] = pos[(s * n + p) * 2]
                    out_states[i, p, 1] = pos[(s * n + p) * 2 + 1]

    free(up)
    free(uh)
    free(gx)
    free(gy)
    free(pos)
    free(newb)
    free(midb)
    free(acc)
