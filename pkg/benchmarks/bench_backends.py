"""Throughput comparison of the compiled core against the numpy fallback.

Runs both hot kernels at working sizes and reports samples per second.
The two backends consume identical draw streams, so the outputs are also
cross-checked here (they agree to libm rounding, ~1e-9 relative).

Usage: python benchmarks/bench_backends.py [--quick]
"""

import argparse
import time

import numpy as np

from deltagas import backend
from deltagas.mollified import CouplingParams
from deltagas.specfun import ContactRateTable


def _time(fn, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_diagram(count):
    z0 = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    hi = np.array([1, 2], dtype=np.int32)
    lo = np.array([0, 1], dtype=np.int32)
    wb = np.array([2.0, 0.5])
    table = ContactRateTable(4.0)
    out = {}
    for name in ("numpy",) + (("compiled",) if backend.HAVE_COMPILED else ()):
        backend.use(name)
        fn = lambda: backend.diagram_chunk(z0, hi, lo, wb, 1.0, count, 3, 99,
                                           table)
        sec = _time(fn)
        w, _ = fn()
        out[name] = (count / sec, w)
    return out


def bench_occupation(count, n_steps):
    z0 = np.array([[0.5, 0.0], [-0.5, 0.0]])
    hi = np.array([1], dtype=np.int32)
    lo = np.array([0], dtype=np.int32)
    coef = np.array([35.0])
    out = {}
    for name in ("numpy",) + (("compiled",) if backend.HAVE_COMPILED else ()):
        backend.use(name)
        fn = lambda: backend.occupation_chunk(z0, hi, lo, coef, 20.0, 0, 1.0,
                                              2.2, n_steps, 1e-4, count, 1, 7)
        sec = _time(fn)
        e, _ = fn()
        out[name] = (count * n_steps / sec, e)
    return out


def report(label, unit, results):
    print(f"\n{label}")
    base = results["numpy"][0]
    for name, (rate, vals) in results.items():
        speedup = rate / base
        print(f"  {name:9s} {rate:12.3e} {unit}   x{speedup:.2f}")
    if "compiled" in results:
        a = results["numpy"][1]
        b = results["compiled"][1]
        rel = np.max(np.abs(a - b) / np.maximum(np.abs(a), 1e-300))
        print(f"  cross-backend max rel diff: {rel:.2e}")


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--quick", action="store_true",
                        help="smaller sizes for smoke runs")
    args = parser.parse_args()
    n_diag = 20_000 if args.quick else 200_000
    n_occ = 200 if args.quick else 1_000
    steps = 2_000 if args.quick else 12_500

    if not backend.HAVE_COMPILED:
        print("compiled core not available; benchmarking the fallback only")

    report("diagram sampler (two-window, three particles)", "samples/s",
           bench_diagram(n_diag))
    report("occupation sampler (pair, per Euler step)", "steps/s",
           bench_occupation(n_occ, steps))
    backend.use("compiled" if backend.HAVE_COMPILED else "numpy")


if __name__ == "__main__":
    main()
