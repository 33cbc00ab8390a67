"""Compare the compiled and numpy kernel backends on representative workloads.

Usage: python3 benchmarks/bench_kernels.py [--repeat R]

Each workload runs once untimed (to trigger compilation), then R timed runs;
the best time is reported. Both backends produce the same draws, so the
outputs are checked for agreement as a side effect.
"""

import argparse
import time

import numpy as np

from specvar import chain
from specvar.kernels import get_backend


def _best(fn, repeat):
    fn()
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def workloads():
    tri = chain.build_chain("triangular")
    nu_args = (*tri.nu_table.arrays(), *tri.site_table.arrays())
    site = tri.site_table.arrays()
    rng = np.random.default_rng(0)
    r, t = np.sqrt(rng.random(20_000)) * 0.99, 2 * np.pi * rng.random(20_000)
    x, y = r * np.cos(t), r * np.sin(t)
    z = rng.random(2000) * np.exp(2j * np.pi * rng.random(2000))
    w = 1 - z
    ts = np.linspace(0.01, np.pi, 512)
    return {
        "partial_sums n=1e5 reps=200": lambda be: be.partial_sums(10 ** 5, 200, 1, *nu_args),
        "blocks m=1e6": lambda be: be.blocks(10 ** 6, 1, *site)[0],
        "walk_on_spheres 2e4 paths": lambda be: be.walk_on_spheres(False, x.copy(), y.copy(), 1 - r,
                                                                   1e-6, 10 ** 6, 1)[2],
        "variance_power_sum n=1024": lambda be: be.variance_power_sum(z.real.copy(), z.imag.copy(), 1024),
        "poisson_sums 512 x 2000": lambda be: be.poisson_sums(ts, w.real.copy(), w.imag.copy(),
                                                              np.ones(2000)),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    nb, npy = get_backend("numba"), get_backend("numpy")
    print(f"{'workload':32s} {'numba [s]':>11s} {'numpy [s]':>11s} {'speedup':>8s}  outputs")
    for name, fn in workloads().items():
        t_nb, a = _best(lambda: fn(nb), args.repeat)
        t_np, b = _best(lambda: fn(npy), args.repeat)
        # float sums differ in summation order only
        same = "equal" if np.allclose(a, b, rtol=1e-10) else "DIFFER"
        print(f"{name:32s} {t_nb:11.4f} {t_np:11.4f} {t_np / t_nb:8.1f}  {same}")


if __name__ == "__main__":
    main()
