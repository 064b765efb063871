"""Chunked Monte Carlo driver.

Work is cut into fixed-size chunks addressed by index.  Each chunk's values
come from a counter-based stream keyed by (seed, domain, chunk), so the
estimate is a pure function of (seed, n_samples) no matter how many worker
threads run the chunks.  Per-chunk moments are merged in chunk order with
the pairwise update of Chan, Golub and LeVeque, which keeps the reduction
deterministic and well conditioned.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

# fixed chunk sizes; these are part of the stream layout, not tuning knobs
DIAGRAM_CHUNK = 16384
OCCUPATION_CHUNK = 4096
PLAIN_CHUNK = 65536


@dataclass(frozen=True)
class Estimate:
    """Monte Carlo estimate with its sampling error.

    ``stderr`` is the sample standard deviation over the per-sample values
    divided by sqrt(n_samples).
    """

    mean: float
    stderr: float
    n_samples: int
    seed: int

    def within(self, other_value, n_sigma):
        return abs(self.mean - other_value) <= n_sigma * self.stderr


def _chunk_moments(values):
    values = np.asarray(values, dtype=np.float64)
    n = values.shape[0]
    mean = float(values.mean())
    m2 = float(np.sum((values - mean) ** 2))
    return n, mean, m2


def _merge(a, b):
    n_a, mean_a, m2_a = a
    n_b, mean_b, m2_b = b
    n = n_a + n_b
    delta = mean_b - mean_a
    mean = mean_a + delta * (n_b / n)
    m2 = m2_a + m2_b + delta * delta * (n_a * n_b / n)
    return n, mean, m2


def run_chunked(values_fn, n_samples, chunk_size, seed, threads=1):
    """Estimate the mean of per-sample values produced chunk by chunk.

    ``values_fn(chunk_index, count)`` returns the ``count`` per-sample
    values of that chunk.  Chunk sizes are fixed: every chunk except the
    last has ``chunk_size`` samples.
    """
    if n_samples < 2:
        raise ValueError("need n_samples >= 2 for a standard error")
    if threads < 1:
        raise ValueError("threads must be >= 1")
    n_chunks = (n_samples + chunk_size - 1) // chunk_size
    sizes = [
        chunk_size if (c + 1) * chunk_size <= n_samples
        else n_samples - c * chunk_size
        for c in range(n_chunks)
    ]

    def one(c):
        vals = values_fn(c, sizes[c])
        if vals.shape != (sizes[c],):
            raise RuntimeError("values_fn returned a wrong-shaped chunk")
        return _chunk_moments(vals)

    if threads == 1 or n_chunks == 1:
        parts = [one(c) for c in range(n_chunks)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(one, range(n_chunks)))

    acc = parts[0]
    for part in parts[1:]:
        acc = _merge(acc, part)
    n, mean, m2 = acc
    stderr = math.sqrt(m2 / (n - 1) / n) if n > 1 else float("inf")
    return Estimate(mean=mean, stderr=stderr, n_samples=n, seed=int(seed))
