"""Compare the compiled and numpy Philox/Box-Muller backends.

    python benchmarks/bench_rng.py [--samples N] [--times M] [--repeat R]
"""
import argparse
import time

import numpy as np

from smoothmart import rng


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--samples", type=int, default=20000)
    ap.add_argument("--times", type=int, default=64)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    n, m = args.samples, args.times
    draws = n * m
    results = {}
    for backend in ("python", "cython"):
        try:
            fn = lambda b=backend: rng.normal_block(7, rng.TAG_CONTINUATION, 0, n, 0, m, backend=b)
            fn()
        except ImportError:
            print(f"{backend:>7}: unavailable (extension not built)")
            continue
        sec = best_of(fn, args.repeat)
        results[backend] = fn()
        print(f"{backend:>7}: {sec * 1e3:8.2f} ms  {draws / sec / 1e6:7.2f} M normals/s")
    if len(results) == 2:
        diff = np.max(np.abs(results["python"] - results["cython"]))
        print(f"max |python - cython| = {diff:.3e}")


if __name__ == "__main__":
    main()
