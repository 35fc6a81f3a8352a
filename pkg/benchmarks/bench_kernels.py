"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import time

import numpy as np

from fluidq import _kernels_py

try:
    from fluidq import _kernels as _kernels_c
except ImportError:
    _kernels_c = None


def _best(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cases():
    lam, mu, c = 0.3145, 0.8473, 10.5
    A, B, C, alpha = mu, lam + mu, lam, 0.5

    def bessel(mod):
        return lambda: [mod.bessel_log(n, x) for n in range(0, 200, 7) for x in (0.5, 5.0, 50.0)]

    def lgamma(mod):
        return lambda: [mod.ln_gamma(0.1 + 0.37 * i) for i in range(5000)]

    def corner(mod):
        return lambda: [mod.corner_series(l, x, alpha, A, B, C, 1e-15, 800, False)
                        for l in (-3, 0, 4) for x in (0.5, 2.0)]

    def sim(mod):
        rng = np.random.default_rng(1)
        n = 200_000
        expo, unif = rng.standard_exponential(n), rng.random(n)
        out_k = np.empty(n, dtype=np.int_)
        out_x = np.empty(n)
        return lambda: mod.simulate_chunk(0, 0.0, 0.0, c, lam, mu, expo, unif, 0.0, 0.5, 0, out_k, out_x)

    return {"bessel_log": bessel, "ln_gamma": lgamma, "corner_series": corner, "simulate_chunk": sim}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    print(f"{'kernel':<16}{'python [s]':>12}{'cython [s]':>12}{'speedup':>10}")
    for name, make in cases().items():
        tp = _best(make(_kernels_py), args.repeat)
        if _kernels_c is None:
            print(f"{name:<16}{tp:>12.4f}{'n/a':>12}{'':>10}")
            continue
        tc = _best(make(_kernels_c), args.repeat)
        print(f"{name:<16}{tp:>12.4f}{tc:>12.4f}{tp / tc:>9.1f}x")


if __name__ == "__main__":
    main()
