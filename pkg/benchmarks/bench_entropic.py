"""Grouped log-sum-exp kernel: numba against the numpy fallback.

Usage: python3 benchmarks/bench_entropic.py [--leaves N] [--repeat R]

The kernel runs once per tree level in the entropic backward composition.
Setting RISKSET_DISABLE_NUMBA=1 makes the package skip the numba path; this
script times both paths directly so the flag has no effect here.
"""
import argparse
import time

import numpy as np

from riskset import _kernels


def make_level(rng, n, fanout, d):
    group = np.repeat(np.arange(n // fanout), fanout)
    logp = np.log(np.full(n, 1.0 / fanout))
    vals = rng.normal(scale=5.0, size=(n, d))
    lam = rng.uniform(0.1, 3.0, size=d)
    return vals, group, logp, lam, n // fanout


def best_of(fn, args, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--leaves", type=int, default=3 ** 12)
    ap.add_argument("--fanout", type=int, default=3)
    ap.add_argument("--d", type=int, default=2)
    ap.add_argument("--repeat", type=int, default=5)
    opts = ap.parse_args()
    args = make_level(np.random.default_rng(0), opts.leaves, opts.fanout, opts.d)

    t_np = best_of(_kernels.grouped_lse_numpy, args, opts.repeat)
    print(f"numpy : {t_np * 1e3:8.2f} ms")
    try:
        from numba import njit
    except ImportError:
        print("numba : not installed")
        return
    fast = njit(_kernels._grouped_lse_loop)
    t0 = time.perf_counter()
    ref = fast(*args)
    print(f"numba : compile {time.perf_counter() - t0:.2f} s")
    t_nb = best_of(fast, args, opts.repeat)
    print(f"numba : {t_nb * 1e3:8.2f} ms  (x{t_np / t_nb:.1f})")
    err = np.max(np.abs(ref - _kernels.grouped_lse_numpy(*args)))
    print(f"max |numba - numpy| = {err:.2e}")


if __name__ == "__main__":
    main()
