"""Backend selection for the hot sampling kernels.

The compiled Cython core is used when its extension module imported
cleanly; otherwise the pure-numpy fallback takes over.  Both backends
consume identical counter-based integer streams, so estimates agree to
floating-point noise and each backend is bit-reproducible on its own.
``use()`` switches explicitly (the benchmark and the cross-backend tests
need that); libraries and the CLI just take the default.
"""

import numpy as np

from . import _corepy

try:
    from . import _core
    HAVE_COMPILED = True
except ImportError:
    _core = None
    HAVE_COMPILED = False

_active = "compiled" if HAVE_COMPILED else "numpy"


def active():
    """Name of the backend in use: 'compiled' or 'numpy'."""
    return _active


def use(name):
    """Select a backend by name; raises if the compiled core is unavailable."""
    global _active
    if name not in ("compiled", "numpy"):
        raise ValueError("backend must be 'compiled' or 'numpy'")
    if name == "compiled" and not HAVE_COMPILED:
        raise RuntimeError("compiled core is not available in this install")
    _active = name


def diagram_chunk(z0, hi_idx, lo_idx, win_beta, t, count, chunk_index, seed,
                  table):
    if _active == "compiled":
        weights = np.empty(count)
        states = np.empty((count, z0.shape[0], 2))
        if table is None:
            # windowless diagram: the core never touches the rate table
            coef, log_lo, log_hi = np.zeros(1), 0.0, 1.0
        else:
            coef, log_lo, log_hi = table.coef, table.log_lo, table.log_hi
        _core.diagram_chunk(
            np.ascontiguousarray(z0),
            np.ascontiguousarray(hi_idx, dtype=np.int32),
            np.ascontiguousarray(lo_idx, dtype=np.int32),
            np.ascontiguousarray(win_beta, dtype=np.float64),
            float(t), int(count), int(chunk_index), int(seed),
            np.ascontiguousarray(coef), float(log_lo),
            float(log_hi), weights, states,
        )
        return weights, states
    return _corepy.diagram_chunk(z0, hi_idx, lo_idx, win_beta, t, count,
                                 chunk_index, seed, table)


def occupation_chunk(z0, hi_idx, lo_idx, coef, inv_eps, kind_code, radius,
                     amp, n_steps, h_eff, count, chunk_index, seed):
    if _active == "compiled":
        expo = np.empty(count)
        states = np.empty((count, z0.shape[0], 2))
        _core.occupation_chunk(
            np.ascontiguousarray(z0),
            np.ascontiguousarray(hi_idx, dtype=np.int32),
            np.ascontiguousarray(lo_idx, dtype=np.int32),
            np.ascontiguousarray(coef, dtype=np.float64),
            float(inv_eps), int(kind_code), float(radius), float(amp),
            int(n_steps), float(h_eff), int(count), int(chunk_index),
            int(seed), expo, states,
        )
        return expo, states
    return _corepy.occupation_chunk(z0, hi_idx, lo_idx, coef, inv_eps,
                                    kind_code, radius, amp, n_steps, h_eff,
                                    count, chunk_index, seed)
