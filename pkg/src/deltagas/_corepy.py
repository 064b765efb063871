"""Pure-numpy implementations of the two hot sampling kernels.

This is the fallback backend: same draw addressing, same arithmetic, same
outputs as the compiled core in deltagas._core, only vectorized across the
samples of a chunk instead of looping in C.  Draw block numbering is a pure
function of (window, particle) and never depends on sampled data, which is
what keeps the two backends on bitwise identical uniform streams.

Kernel contracts are documented here once; the compiled module mirrors them.
"""

import math

import numpy as np

from .rng import DOMAIN_OCCUPATION, DOMAIN_SERIES, block_normals, block_uniforms

FOUR_PI = 4.0 * math.pi
SQRT2 = math.sqrt(2.0)


def diagram_chunk(z0, hi_idx, lo_idx, win_beta, t, count, chunk_index, seed,
                  table):
    """Sample ``count`` weighted paths of one collision diagram.

    z0        : (N, 2) separated start configuration
    hi_idx/lo_idx : 0-based particle rows of each window's pair, length m
    win_beta  : contact scale per window, length m
    table     : ContactRateTable covering y up to max(win_beta) * t

    Returns (weights, states): the scalar kernel weight and the final
    configuration of every sample.  The time chain is drawn window by
    window; the contact duration of a window starting at s uses the
    log-squared importance density g(v) = 1 / (v log^2(e T / v)) on (0, T],
    T = t - s, whose inverse CDF is v = e T exp(-1/u).  The weight carries
    s_beta(v) / g(v) = G(beta v) / u^2 evaluated in log form, so durations
    far below the float64 underflow line still weigh in exactly.
    """
    n = z0.shape[0]
    m = len(hi_idx)
    items = np.arange(count, dtype=np.uint32)
    pos = np.broadcast_to(z0, (count, n, 2)).copy()
    w = np.ones(count)
    block = 0

    s_win = np.empty((m, count))
    v_win = np.empty((m, count))
    prev_tau = np.zeros(count)
    for k in range(m):
        u_pos, u_half = block_uniforms(seed, DOMAIN_SERIES, chunk_index,
                                       items, np.uint32(block))
        block += 1
        gap = t - prev_tau
        s = prev_tau + u_half * gap
        w *= gap
        horizon = t - s
        inv_u = 1.0 / u_pos
        log_y = math.log(win_beta[k]) + 1.0 + np.log(horizon) - inv_u
        w *= table.rate_from_log(log_y) * inv_u * inv_u
        v = math.e * horizon * np.exp(-inv_u)
        s_win[k] = s
        v_win[k] = v
        prev_tau = s + v

    spectators = [p for p in range(n)]
    prev = np.zeros(count)
    for k in range(m):
        hi = int(hi_idx[k])
        lo = int(lo_idx[k])
        others = [p for p in spectators if p not in (hi, lo)]
        dt = s_win[k] - prev
        root_dt = np.sqrt(dt)[:, None]
        for p in others:
            gx, gy = block_normals(seed, DOMAIN_SERIES, chunk_index, items,
                                   np.uint32(block))
            block += 1
            pos[:, p, 0] += root_dt[:, 0] * gx
            pos[:, p, 1] += root_dt[:, 0] * gy
        # pair weight is the product-split factor at the window start
        d = pos[:, hi] - pos[:, lo]
        sq = np.sum(d * d, axis=1)
        dt_safe = np.maximum(dt, 5e-324)
        w *= np.where(
            dt > 0.0,
            np.exp(-sq / (4.0 * dt_safe)) / (FOUR_PI * dt_safe),
            0.0,
        )
        gx, gy = block_normals(seed, DOMAIN_SERIES, chunk_index, items,
                               np.uint32(block))
        block += 1
        meet = 0.5 * (pos[:, hi] + pos[:, lo])
        half_root = np.sqrt(0.5 * dt)
        meet[:, 0] += half_root * gx
        meet[:, 1] += half_root * gy
        pos[:, hi] = meet
        pos[:, lo] = meet
        # contact window: spectators flow freely, the fused center diffuses
        root_v = np.sqrt(v_win[k])
        for p in others:
            gx, gy = block_normals(seed, DOMAIN_SERIES, chunk_index, items,
                                   np.uint32(block))
            block += 1
            pos[:, p, 0] += root_v * gx
            pos[:, p, 1] += root_v * gy
        gx, gy = block_normals(seed, DOMAIN_SERIES, chunk_index, items,
                               np.uint32(block))
        block += 1
        center = SQRT2 * meet
        center[:, 0] += root_v * gx
        center[:, 1] += root_v * gy
        reborn = center / SQRT2
        pos[:, hi] = reborn
        pos[:, lo] = reborn
        prev = s_win[k] + v_win[k]

    dt = t - prev
    root_dt = np.sqrt(dt)
    for p in range(n):
        gx, gy = block_normals(seed, DOMAIN_SERIES, chunk_index, items,
                               np.uint32(block))
        block += 1
        pos[:, p, 0] += root_dt * gx
        pos[:, p, 1] += root_dt * gy
    return w, pos


def occupation_chunk(z0, hi_idx, lo_idx, coef, inv_eps, kind_code, radius,
                     amp, n_steps, h_eff, count, chunk_index, seed):
    """Euler chunk of the mollified occupation exponents.

    Exact Gaussian increments of variance h_eff per coordinate; the pair
    occupation integrands are evaluated at the midpoint of each step and
    accumulated into one exponent per path (exponentiation happens in the
    caller).  Block index is step * N + particle.

    Returns (exponents, final states).
    """
    n = z0.shape[0]
    n_pairs = len(hi_idx)
    items = np.arange(count, dtype=np.uint32)
    pos = np.broadcast_to(z0, (count, n, 2)).copy()
    expo = np.zeros(count)
    root_h = math.sqrt(h_eff)
    inv_r2 = 1.0 / (radius * radius)
    for step in range(n_steps):
        new = np.empty_like(pos)
        for p in range(n):
            gx, gy = block_normals(seed, DOMAIN_OCCUPATION, chunk_index,
                                   items, np.uint32(step * n + p))
            new[:, p, 0] = pos[:, p, 0] + root_h * gx
            new[:, p, 1] = pos[:, p, 1] + root_h * gy
        mid = 0.5 * (pos + new)
        for j in range(n_pairs):
            d = mid[:, int(hi_idx[j])] - mid[:, int(lo_idx[j])]
            u2 = np.sum(d * d, axis=1) * (inv_eps * inv_eps * inv_r2)
            inside = u2 < 1.0
            if kind_code == 0:
                val = np.zeros(count)
                val[inside] = amp * np.exp(-1.0 / (1.0 - u2[inside]))
            else:
                val = np.where(inside, amp, 0.0)
            expo += coef[j] * val
        pos = new
    return expo, pos
