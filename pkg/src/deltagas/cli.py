"""Command-line front end.

Subcommands: series, mollified, sweep, drift, selftest.  Runs are described
by an INI-style config (``key = value`` under ``[section]`` headers); the
command line can override the seed and the output path and sets the worker
thread count.  Output tables are RFC-4180 CSV with reals at 17 significant
digits, so a written value parses back to its exact bits and identical runs
produce identical bytes regardless of --threads.

Exit codes: 0 success, 1 config or validation error, 2 numerical or
output failure.
"""

import argparse
import configparser
import csv
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import geometry, motion, series
from .mollified import (
    CouplingParams,
    MollifierSpec,
    epsilon_sweep,
    occupation_fk_estimate,
)
from .specfun import DomainError, ToleranceError

_SCHEMA = {
    "run": {"n_particles", "t", "z0", "seed", "n_samples", "m_max", "out"},
    "coupling": {"beta", "lambda", "w"},
    "mollifier": {"kind", "radius"},
    "mollified": {"eps_list", "h"},
    "drift": {"grid_n", "grid_extent"},
}

_REQUIRED = {
    ("run", "n_particles"), ("run", "t"), ("run", "z0"), ("run", "seed"),
    ("run", "n_samples"), ("run", "out"),
}


class ConfigError(Exception):
    """Carries every violation found while reading a config."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass
class RunConfig:
    n_particles: int
    t: float
    z0: np.ndarray
    seed: int
    n_samples: int
    m_max: int
    out: str
    coupling: CouplingParams
    eps_list: list
    h_mode: str            # "auto" or a float literal
    grid_n: int = 21
    grid_extent: float = 2.0

    def h_for(self, eps):
        if self.h_mode == "auto":
            return eps * eps / 20.0
        return float(self.h_mode)


def _floats(text):
    return [float(tok) for tok in text.replace(",", " ").split()]


def parse_config(text):
    """Parse and validate; raises ConfigError listing every violation."""
    parser = configparser.ConfigParser(interpolation=None)
    bad = []
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"config syntax: {exc}"]) from exc

    for section in parser.sections():
        if section not in _SCHEMA:
            bad.append(f"unknown section [{section}]")
            continue
        for key in parser[section]:
            if key not in _SCHEMA[section]:
                bad.append(f"unknown key {key!r} in [{section}]")
    for section, key in _REQUIRED:
        if not parser.has_option(section, key):
            bad.append(f"missing required key {key!r} in [{section}]")

    def grab(section, key, conv, default=None, check=None, msg=None):
        if not parser.has_option(section, key):
            return default
        raw = parser.get(section, key)
        try:
            val = conv(raw)
        except Exception:
            bad.append(f"[{section}] {key} = {raw!r} is not {msg or 'valid'}")
            return default
        if check is not None and not check(val):
            bad.append(f"[{section}] {key} = {raw!r} fails: {msg}")
            return default
        return val

    n = grab("run", "n_particles", int, check=lambda v: v >= 2,
             msg="an integer >= 2")
    t = grab("run", "t", float, check=lambda v: v > 0 and math.isfinite(v),
             msg="a positive time")
    seed = grab("run", "seed", int, check=lambda v: 0 <= v < 2 ** 64,
                msg="an unsigned 64-bit integer")
    n_samples = grab("run", "n_samples", int, check=lambda v: v >= 2,
                     msg="an integer >= 2")
    m_max = grab("run", "m_max", int, default=1, check=lambda v: v >= 0,
                 msg="a nonnegative integer")
    out = grab("run", "out", str, check=lambda v: len(v.strip()) > 0,
               msg="a nonempty path")

    z0 = None
    z0_vals = grab("run", "z0", _floats, msg="a list of reals")
    if z0_vals is not None and n is not None:
        if len(z0_vals) != 2 * n:
            bad.append(f"[run] z0 needs exactly {2 * n} reals for "
                       f"n_particles = {n}, got {len(z0_vals)}")
        else:
            z0 = np.array(z0_vals, dtype=np.float64).reshape(n, 2)

    kind = grab("mollifier", "kind", str, default="smooth_bump",
                check=lambda v: v in ("smooth_bump", "disk_uniform"),
                msg="one of smooth_bump, disk_uniform")
    radius = grab("mollifier", "radius", float, default=1.0,
                  check=lambda v: v > 0, msg="a positive radius")
    mollifier = None
    if kind is not None and radius is not None:
        mollifier = MollifierSpec(kind, radius)

    has_beta = parser.has_option("coupling", "beta")
    has_lambda = parser.has_option("coupling", "lambda")
    coupling = None
    if has_beta and has_lambda:
        bad.append("[coupling] give beta or lambda, not both")
    elif not (has_beta or has_lambda):
        bad.append("[coupling] needs beta or lambda")
    elif n is not None and mollifier is not None:
        n_pairs = n * (n - 1) // 2
        w_vals = grab("coupling", "w", _floats, default=[1.0],
                      msg="a list of positive reals")
        key = "beta" if has_beta else "lambda"
        vals = grab("coupling", key, _floats, msg="a list of reals")
        if vals is not None and len(vals) not in (1, n_pairs):
            bad.append(f"[coupling] {key} needs 1 or {n_pairs} entries")
            vals = None
        if w_vals is not None and len(w_vals) not in (1, n_pairs):
            bad.append(f"[coupling] w needs 1 or {n_pairs} entries")
            w_vals = None
        if vals is not None and w_vals is not None:
            spread = lambda xs: np.full(n_pairs, xs[0]) if len(xs) == 1 \
                else np.array(xs)
            try:
                if has_beta:
                    coupling = CouplingParams.from_betas(
                        n, spread(vals), spread(w_vals), mollifier)
                else:
                    coupling = CouplingParams.from_lambdas(
                        n, spread(vals), spread(w_vals), mollifier)
            except (DomainError, ValueError) as exc:
                bad.append(f"[coupling] rejected: {exc}")

    eps_list = grab("mollified", "eps_list", _floats, default=[],
                    msg="a list of reals")
    if eps_list:
        for e in eps_list:
            if not 0.0 < e < 1.0:
                bad.append(f"[mollified] eps {e} must lie in (0, 1)")
    h_mode = "auto"
    if parser.has_option("mollified", "h"):
        raw = parser.get("mollified", "h").strip()
        if raw != "auto":
            try:
                h_val = float(raw)
                if not h_val > 0:
                    raise ValueError
                h_mode = raw
            except ValueError:
                bad.append(f"[mollified] h = {raw!r} must be 'auto' or > 0")
        if h_mode != "auto" and eps_list:
            h_val = float(h_mode)
            for e in eps_list:
                if h_val > e * e / 20.0 * (1 + 1e-12):
                    bad.append(
                        f"[mollified] h = {h_val} violates h <= eps^2/20 "
                        f"for eps = {e}")

    grid_n = grab("drift", "grid_n", int, default=21, check=lambda v: v >= 2,
                  msg="an integer >= 2")
    grid_extent = grab("drift", "grid_extent", float, default=2.0,
                       check=lambda v: v > 0, msg="a positive extent")

    if z0 is not None:
        if not np.all(np.isfinite(z0)):
            bad.append("[run] z0 entries must be finite")

    if bad:
        raise ConfigError(bad)
    return RunConfig(
        n_particles=n, t=t, z0=z0, seed=seed, n_samples=n_samples,
        m_max=m_max, out=out, coupling=coupling, eps_list=eps_list,
        h_mode=h_mode, grid_n=grid_n, grid_extent=grid_extent,
    )


def _fmt(x):
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def write_csv(path, header, rows):
    """RFC-4180 CSV (CRLF, quoted when needed), reals at 17 significant digits."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])


def _cmd_series(cfg, threads):
    result = series.series_eval(
        cfg.coupling, cfg.z0, cfg.t, series.const_one(), cfg.m_max,
        cfg.n_samples, cfg.seed, threads,
    )
    write_csv(
        cfg.out,
        ["m", "sequence", "mean", "stderr", "n", "seed"],
        [(r["m"], r["sequence"], r["mean"], r["stderr"], r["n"], r["seed"])
         for r in result.terms],
    )
    tr = result.truncation
    print(f"series total = {result.total.mean:.12g} "
          f"+- {result.total.stderr:.3g} (n = {result.total.n_samples})")
    print(f"truncation: last layer {tr.last_layer:.3g}, ratio {tr.ratio:.3g}, "
          f"geometric tail bound {tr.tail_bound:.3g}")
    return 0


def _sweep_rows(cfg, eps_values, threads):
    return epsilon_sweep(
        cfg.coupling, cfg.z0, cfg.t, series.const_one(), eps_values,
        cfg.n_samples, cfg.seed,
        h_list=[cfg.h_for(e) for e in eps_values], threads=threads,
    )


def _cmd_mollified(cfg, threads):
    if len(cfg.eps_list) != 1:
        raise ConfigError(["mollified expects exactly one eps in eps_list"])
    rows = _sweep_rows(cfg, cfg.eps_list, threads)
    write_csv(cfg.out, ["eps", "h", "mean", "stderr", "n", "seed", "lambda",
                        "beta"],
              [tuple(r.values()) for r in rows])
    r = rows[0]
    print(f"mollified estimate at eps = {r['eps']}: {r['mean']:.12g} "
          f"+- {r['stderr']:.3g}")
    return 0


def _cmd_sweep(cfg, threads):
    if not cfg.eps_list:
        raise ConfigError(["sweep needs a nonempty eps_list"])
    rows = _sweep_rows(cfg, cfg.eps_list, threads)
    write_csv(cfg.out, ["eps", "h", "mean", "stderr", "n", "seed", "lambda",
                        "beta"],
              [tuple(r.values()) for r in rows])
    for r in rows:
        print(f"eps = {r['eps']}: {r['mean']:.12g} +- {r['stderr']:.3g}")
    return 0


def _cmd_drift(cfg, threads):
    """Tabulate the particle drift while particle 1 scans a grid."""
    base = cfg.z0.copy()
    offsets = np.linspace(-cfg.grid_extent, cfg.grid_extent, cfg.grid_n)
    rows = []
    for dy in offsets:
        for dx in offsets:
            z = base.copy()
            z[0, 0] += dx
            z[0, 1] += dy
            if isinstance(geometry.classify_config(z), geometry.Separated):
                b = motion.particle_drift(cfg.coupling, z)
                flat = []
                for v in b:
                    flat.extend([v.real, v.imag])
            else:
                flat = [math.nan] * (2 * cfg.n_particles)
            rows.append((z[0, 0], z[0, 1], *flat))
    header = ["x", "y"]
    for k in range(1, cfg.n_particles + 1):
        header.extend([f"b{k}x", f"b{k}y"])
    write_csv(cfg.out, header, rows)
    print(f"drift grid: {len(rows)} rows -> {cfg.out}")
    return 0


def _selftest_checks():
    import numpy.testing as npt

    from . import kernels, specfun
    from .rng import DrawStream, block_uniforms

    def gamma_recurrence():
        for u in (0.3, 1.7, 11.5):
            assert abs(specfun.gamma_fn(u + 1) / (u * specfun.gamma_fn(u)) - 1) < 1e-12

    def macdonald_branches():
        lo = specfun.macdonald_k(0, 2.0 - 1e-12)
        hi = specfun.macdonald_k(0, 2.0 + 1e-12)
        assert abs(lo / hi - 1) < 1e-9

    def laplace_identity():
        quad = specfun.QuadratureSpec(abs_tol=1e-9, rel_tol=1e-9)
        lam = 2.0
        head = specfun.s_beta_time_integral(1.0, 1e-9, quad)
        tail = specfun.adaptive_quad(
            lambda ts: np.array([
                math.exp(-lam * x) * specfun.s_beta(1.0, x, quad)
                for x in np.atleast_1d(ts)]),
            1e-9, 40.0, specfun.QuadratureSpec(abs_tol=1e-7, rel_tol=1e-7),
            seeds=(0.01, 0.1, 1.0, 5.0))
        assert abs((head + tail) / (4 * math.pi / math.log(lam)) - 1) < 1e-4

    def product_split():
        rng = np.random.default_rng(0)
        for _ in range(200):
            tt = float(rng.uniform(0.05, 3.0))
            a, b, x = rng.normal(size=(3, 2))
            lhs = kernels.heat_kernel(tt, x - a) * kernels.heat_kernel(tt, x - b)
            g = kernels.gaussian_product_split(tt, a, b)
            rhs = g.weight * kernels.heat_kernel(g.half_time, x - g.midpoint)
            npt.assert_allclose(lhs, rhs, rtol=1e-12)

    def drift_consistency():
        rng = np.random.default_rng(1)
        coup = CouplingParams.from_betas(3, [1.0, 2.0, 0.5], [1.0, 2.0, 0.7])
        z = rng.normal(size=(3, 2))
        b = motion.particle_drift(coup, z)
        assert abs(b.sum()) < 1e-12
        for p in coup.pairs:
            lhs = (b[p.hi - 1] - b[p.lo - 1]) / math.sqrt(2)
            assert abs(lhs - motion.pair_drift(coup, z, p)) < 1e-12

    def stream_reproducibility():
        a = DrawStream(123, chunk=4, item=9).normal_points(32)
        b = DrawStream(123, chunk=4, item=9).normal_points(32)
        assert a.tobytes() == b.tobytes()
        u1, u2 = block_uniforms(123, 1, 0, np.uint32(0), np.uint32(0))
        assert 0.0 < float(u1) <= 1.0 and 0.0 <= float(u2) < 1.0

    return [
        ("gamma recurrence", gamma_recurrence),
        ("macdonald branch continuity", macdonald_branches),
        ("contact rate laplace identity", laplace_identity),
        ("gaussian product split", product_split),
        ("drift consistency", drift_consistency),
        ("stream reproducibility", stream_reproducibility),
    ]


def _cmd_selftest(_cfg, _threads):
    failures = 0
    for name, check in _selftest_checks():
        try:
            check()
        except Exception as exc:  # report and continue
            failures += 1
            print(f"FAIL {name}: {exc}")
        else:
            print(f"ok   {name}")
    if failures:
        print(f"{failures} check(s) failed")
        return 2
    print("all checks passed")
    return 0


_COMMANDS = {
    "series": (_cmd_series, True),
    "mollified": (_cmd_mollified, True),
    "sweep": (_cmd_sweep, True),
    "drift": (_cmd_drift, True),
    "selftest": (_cmd_selftest, False),
}


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="deltagas",
        description="Delta-gas semigroup laboratory: diagrammatic series, "
                    "mollified occupation sampling, drift diagnostics.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=(
            "CSV schemas per subcommand:\n"
            "  series     m,sequence,mean,stderr,n,seed\n"
            "  mollified  eps,h,mean,stderr,n,seed,lambda,beta\n"
            "  sweep      eps,h,mean,stderr,n,seed,lambda,beta\n"
            "  drift      x,y,b1x,b1y,...,bNx,bNy (one b pair per particle)\n"
            "  selftest   no CSV; prints one ok/FAIL line per invariant\n"
        ),
    )
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", help="path to the INI run description")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("--out", help="override the config output path")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads (default 1)")
    args = parser.parse_args(argv)

    runner, needs_config = _COMMANDS[args.command]
    cfg = None
    if needs_config or args.config:
        if not args.config:
            print("error: this command requires --config", file=sys.stderr)
            return 1
        try:
            with open(args.config) as fh:
                text = fh.read()
        except OSError as exc:
            print(f"error: cannot read config: {exc}", file=sys.stderr)
            return 1
        try:
            cfg = parse_config(text)
        except ConfigError as exc:
            for v in exc.violations:
                print(f"config error: {v}", file=sys.stderr)
            return 1
        if args.seed is not None:
            if not 0 <= args.seed < 2 ** 64:
                print("config error: --seed out of range", file=sys.stderr)
                return 1
            cfg.seed = args.seed
        if args.out is not None:
            cfg.out = args.out
    if args.threads < 1:
        print("config error: --threads must be >= 1", file=sys.stderr)
        return 1

    try:
        return runner(cfg, args.threads)
    except ConfigError as exc:
        for v in exc.violations:
            print(f"config error: {v}", file=sys.stderr)
        return 1
    except DomainError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except ToleranceError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"output failure: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
