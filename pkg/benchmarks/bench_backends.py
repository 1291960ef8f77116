"""Time the numba kernels against the pure-numpy fallback.

Usage: python3 benchmarks/bench_backends.py [--repeat N]

Kernel timings call both implementations directly. The end-to-end rows run
``solve_ess`` + ``ess_certificate`` in a subprocess under each value of
PHENOESS_BACKEND so the whole package uses one backend at a time.
"""
import argparse
import os
import subprocess
import sys
import time

import numpy as np

from phenoess._kernels import _nb, _np

E2E = """
import time
from phenoess import uniform
from phenoess.ess_solver import CompetitionParams, solve_ess
from phenoess.fitness import ess_certificate
d = uniform(0.0, 1.0)
for a, p in [(0.2, 0.2), (5.0, 0.2)]:
    solve_ess(CompetitionParams(a, p), d, 51)
t = time.perf_counter()
for a, p in [(0.2, 0.2), (5.0, 0.2), (5.0, 0.5), (1.0, 0.3)]:
    s = solve_ess(CompetitionParams(a, p), d)
    ess_certificate(s.strategy, CompetitionParams(a, p), d)
print(time.perf_counter() - t)
"""


def best_of(fn, repeat):
    fn()  # warm-up (numba compiles or loads its cache here)
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def cases():
    rng = np.random.default_rng(0)
    s1 = np.sort(rng.uniform(0.0, 10.0, 2000))
    s0 = np.zeros_like(s1)
    targets = np.sort(rng.uniform(0.0, 50.0, 2000))
    n = 20000
    xl = np.sort(rng.uniform(0, 1, n))
    xh = xl + 1e-4
    fl, fh = rng.uniform(0, 2, n), rng.uniform(0, 2, n)
    Fl = np.sort(rng.uniform(0, 1, n))
    Fh = np.minimum(Fl + rng.uniform(0, 0.05, n), 1.0)
    times = np.sort(rng.uniform(0, 1, 100_000))
    u = rng.random(100_000)
    return {
        "kernel_log_batch (2000 limits)":
            lambda m: m.kernel_log_batch(s0, s1, 0.3, 1e-10, 1e-10, 200),
        "invert_kernel_batch (2000 targets)":
            lambda m: m.invert_kernel_batch(0.0, targets, 10.0, 0.3, 1e-10, 1e-10, 200),
        "bracket_panels (20000 panels)":
            lambda m: m.bracket_panels(xl, xh, fl, fh, Fl, Fh, 4.0, 0.2),
        "mc_mean_fitness (N=1e5)":
            lambda m: m.mc_mean_fitness(times, 0.5, u, 0.2, 5.0, True),
    }


def end_to_end(backend):
    env = dict(os.environ, PHENOESS_BACKEND=backend)
    out = subprocess.run([sys.executable, "-c", E2E], env=env, capture_output=True, text=True,
                         check=True)
    return float(out.stdout.strip())


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--skip-e2e", action="store_true")
    args = ap.parse_args(argv)
    print(f"{'kernel':40s} {'numba [ms]':>12s} {'numpy [ms]':>12s} {'speedup':>8s}")
    for name, fn in cases().items():
        t_nb = best_of(lambda: fn(_nb), args.repeat)
        t_np = best_of(lambda: fn(_np), args.repeat)
        print(f"{name:40s} {1e3 * t_nb:12.3f} {1e3 * t_np:12.3f} {t_np / t_nb:8.1f}")
    if not args.skip_e2e:
        t_nb, t_np = end_to_end("numba"), end_to_end("numpy")
        print(f"{'solve_ess + certificate (4 cases)':40s} {1e3 * t_nb:12.1f} {1e3 * t_np:12.1f} "
              f"{t_np / t_nb:8.1f}")


if __name__ == "__main__":
    main()
