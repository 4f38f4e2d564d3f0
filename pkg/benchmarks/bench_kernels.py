"""Time the numba kernels against their numpy fallbacks.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5]

Both namespaces are called directly on identical inputs, so one process
covers both paths (``CWC_NUMBA`` only selects the default namespace).
The first numba call (compilation) is excluded from the timings.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from cwc import _kernels


def _time(fn, args, repeat):
    fn(*args)  # warm-up / compile
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def cases(rng):
    n = 2048
    # soft thresholding of an n x 100 block (one IST sweep over 100 snapshots)
    a = rng.standard_normal((n, 100))
    yield "soft_threshold_cols", (a, np.full(100, 0.5), 1.0 / (1.0 + rng.random(n)))
    # shifted tridiagonal MINRES (inner solve of shift-invert Lanczos)
    d = -2.0 * np.ones(n) * n**2
    e = np.ones(n - 1) * n**2
    yield "tridiag_minres", (d, e, 1.0e4, rng.standard_normal(n), 1e-10, 4 * n)
    # sequential draws without replacement
    p = rng.random(50)
    p /= p.sum()
    yield "sequential_inclusion", (p, 10, rng.random((20000, 10)))
    # random-shift sampler on 1024 levels
    levels = np.sort(rng.random(1024)) * 1000.0
    mult = np.ones(1024, dtype=np.int64)
    yield "shift_inclusion", (levels, mult, 1000.0, 200, rng.random((200, 4000)))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if _kernels.numba_impl is None:
        print("numba unavailable: only the numpy path can be timed")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<24}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}")
    for name, kargs in cases(rng):
        t_np = _time(getattr(_kernels.numpy_impl, name), kargs, args.repeat)
        if _kernels.numba_impl is None:
            print(f"{name:<24}{t_np:>12.4g}{'-':>12}{'-':>10}")
            continue
        t_nb = _time(getattr(_kernels.numba_impl, name), kargs, args.repeat)
        print(f"{name:<24}{t_np:>12.4g}{t_nb:>12.4g}{t_np / t_nb:>10.1f}")


if __name__ == "__main__":
    main()
