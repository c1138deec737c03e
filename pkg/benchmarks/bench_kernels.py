#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallbacks.

Run:  python benchmarks/bench_kernels.py
The numba path needs one warm-up call per signature to trigger (or load)
compilation; warm-up time is reported separately.
"""

import time

import numpy as np

from patchfuse import _kernels


def timeit(fn, *args, repeat=20):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def bench_resize(rng):
    cases = [
        ("700x460 -> 299x299", (460, 700), (299, 299)),
        ("175x115 -> 299x299", (115, 175), (299, 299)),
        ("64x64   -> 299x299", (64, 64), (299, 299)),
    ]
    print("bilinear resize")
    for name, (h, w), (oh, ow) in cases:
        src = rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)
        t_np = timeit(_kernels.resize_bilinear_u8_numpy, src, ow, oh)
        line = f"  {name}  numpy {1e3 * t_np:8.2f} ms"
        if _kernels.resize_bilinear_u8_numba is not None:
            t_nb = timeit(_kernels.resize_bilinear_u8_numba, src, ow, oh)
            line += f"  numba {1e3 * t_nb:8.2f} ms  speedup {t_np / t_nb:5.1f}x"
        print(line)


def bench_patch_stats(rng):
    cases = [("700x460", (460, 700)), ("299x299", (299, 299)), ("64x64", (64, 64))]
    print("patch statistics (histogram + block sums)")
    for name, (h, w) in cases:
        src = rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)
        cuts_y = np.array([h * i // 4 for i in range(5)], dtype=np.int64)
        cuts_x = np.array([w * i // 4 for i in range(5)], dtype=np.int64)
        t_np = timeit(_kernels.patch_stats_numpy, src, cuts_y, cuts_x)
        line = f"  {name}  numpy {1e3 * t_np:8.2f} ms"
        if _kernels.patch_stats_numba is not None:
            t_nb = timeit(_kernels.patch_stats_numba, src, cuts_y, cuts_x)
            line += f"  numba {1e3 * t_nb:8.2f} ms  speedup {t_np / t_nb:5.1f}x"
        print(line)


def main():
    rng = np.random.default_rng(0)
    print(f"numba kernels active: {_kernels.USING_NUMBA}")
    if _kernels.USING_NUMBA:
        src = rng.integers(0, 256, size=(32, 32, 3), dtype=np.uint8)
        cuts = np.array([32 * i // 4 for i in range(5)], dtype=np.int64)
        start = time.perf_counter()
        _kernels.resize_bilinear_u8_numba(src, 8, 8)
        _kernels.patch_stats_numba(src, cuts, cuts)
        print(f"warm-up (compile or cache load): {time.perf_counter() - start:.2f} s")
    bench_resize(rng)
    bench_patch_stats(rng)


if __name__ == "__main__":
    main()
