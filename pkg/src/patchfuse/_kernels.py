"""Numeric inner loops with numba-compiled and pure-numpy implementations.

The compiled path is used when numba imports cleanly; set
``PATCHFUSE_DISABLE_NUMBA=1`` to force the numpy fallback. Both paths are
bit-identical (asserted in tests): the resize blend applies the same
float64 expression per output sample, and the patch-statistics kernel
accumulates exact int64 sums so no floating-point reduction order is
involved. ``benchmarks/bench_kernels.py`` times one against the other.
"""

from __future__ import annotations

import os

import numpy as np


def _numba_requested() -> bool:
    flag = os.environ.get("PATCHFUSE_DISABLE_NUMBA", "").strip().lower()
    return flag in ("", "0", "false", "no")


USING_NUMBA = False
if _numba_requested():
    try:
        from numba import njit

        USING_NUMBA = True
    except ImportError:
        pass


def resize_bilinear_u8_numpy(src: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    """Bilinear resize of an (h, w, 3) uint8 array, half-pixel centers.

    Source coordinate for output index d is (d + 0.5) * in/out - 0.5,
    clamped to [0, in - 1]; the 4-neighbour blend is rounded
    half-away-from-zero back to uint8.
    """
    in_h, in_w = src.shape[0], src.shape[1]
    xs = (np.arange(out_w, dtype=np.float64) + 0.5) * (in_w / out_w) - 0.5
    ys = (np.arange(out_h, dtype=np.float64) + 0.5) * (in_h / out_h) - 0.5
    np.clip(xs, 0.0, in_w - 1.0, out=xs)
    np.clip(ys, 0.0, in_h - 1.0, out=ys)
    x0 = xs.astype(np.int64)
    y0 = ys.astype(np.int64)
    x1 = np.minimum(x0 + 1, in_w - 1)
    y1 = np.minimum(y0 + 1, in_h - 1)
    fx = (xs - x0)[None, :, None]
    fy = (ys - y0)[:, None, None]

    pix = src.astype(np.float64)
    row0 = pix[y0]
    row1 = pix[y1]
    top = row0[:, x0] * (1.0 - fx) + row0[:, x1] * fx
    bot = row1[:, x0] * (1.0 - fx) + row1[:, x1] * fx
    out = top * (1.0 - fy) + bot * fy
    return np.floor(out + 0.5).astype(np.uint8)


def _resize_bilinear_u8_loop(src, out_w, out_h):
    in_h, in_w, n_ch = src.shape
    sx = in_w / out_w
    sy = in_h / out_h
    out = np.empty((out_h, out_w, n_ch), dtype=np.uint8)
    for oy in range(out_h):
        y = (oy + 0.5) * sy - 0.5
        if y < 0.0:
            y = 0.0
        if y > in_h - 1.0:
            y = in_h - 1.0
        y0 = int(np.floor(y))
        y1 = min(y0 + 1, in_h - 1)
        fy = y - y0
        for ox in range(out_w):
            x = (ox + 0.5) * sx - 0.5
            if x < 0.0:
                x = 0.0
            if x > in_w - 1.0:
                x = in_w - 1.0
            x0 = int(np.floor(x))
            x1 = min(x0 + 1, in_w - 1)
            fx = x - x0
            for c in range(n_ch):
                top = src[y0, x0, c] * (1.0 - fx) + src[y0, x1, c] * fx
                bot = src[y1, x0, c] * (1.0 - fx) + src[y1, x1, c] * fx
                v = top * (1.0 - fy) + bot * fy
                out[oy, ox, c] = np.uint8(np.floor(v + 0.5))
    return out


def patch_stats_numpy(src: np.ndarray, cuts_y: np.ndarray, cuts_x: np.ndarray):
    """Exact integer statistics feeding the synthetic feature descriptor.

    Returns (hist, block_sum, block_sq, block_npix):
      hist       (3, 32) int64   per-channel counts of value >> 3
      block_sum  (B, 3)  int64   per-block per-channel sum of samples
      block_sq   (B,)    int64   per-block sum of squared samples, all channels
      block_npix (B,)    int64   pixels per block
    Blocks are the (len(cuts_y)-1) x (len(cuts_x)-1) grid in row-major order.
    """
    hist = np.empty((3, 32), dtype=np.int64)
    binned = (src >> 3).reshape(-1, 3)
    for c in range(3):
        hist[c] = np.bincount(binned[:, c], minlength=32)

    g_y = len(cuts_y) - 1
    g_x = len(cuts_x) - 1
    n_blocks = g_y * g_x
    block_sum = np.zeros((n_blocks, 3), dtype=np.int64)
    block_sq = np.zeros(n_blocks, dtype=np.int64)
    block_npix = np.zeros(n_blocks, dtype=np.int64)
    wide = src.astype(np.int64)
    for by in range(g_y):
        for bx in range(g_x):
            block = wide[cuts_y[by]:cuts_y[by + 1], cuts_x[bx]:cuts_x[bx + 1]]
            b = by * g_x + bx
            block_sum[b] = block.sum(axis=(0, 1))
            block_sq[b] = (block * block).sum()
            block_npix[b] = block.shape[0] * block.shape[1]
    return hist, block_sum, block_sq, block_npix


def _patch_stats_loop(src, cuts_y, cuts_x):
    h, w, _ = src.shape
    hist = np.zeros((3, 32), dtype=np.int64)
    g_y = len(cuts_y) - 1
    g_x = len(cuts_x) - 1
    n_blocks = g_y * g_x
    block_sum = np.zeros((n_blocks, 3), dtype=np.int64)
    block_sq = np.zeros(n_blocks, dtype=np.int64)
    block_npix = np.zeros(n_blocks, dtype=np.int64)
    for by in range(g_y):
        for bx in range(g_x):
            b = by * g_x + bx
            block_npix[b] = (cuts_y[by + 1] - cuts_y[by]) * (cuts_x[bx + 1] - cuts_x[bx])
            for y in range(cuts_y[by], cuts_y[by + 1]):
                for x in range(cuts_x[bx], cuts_x[bx + 1]):
                    for c in range(3):
                        v = np.int64(src[y, x, c])
                        hist[c, v >> 3] += 1
                        block_sum[b, c] += v
                        block_sq[b] += v * v
    return hist, block_sum, block_sq, block_npix


if USING_NUMBA:
    resize_bilinear_u8_numba = njit(cache=True)(_resize_bilinear_u8_loop)
    patch_stats_numba = njit(cache=True)(_patch_stats_loop)
    resize_bilinear_u8 = resize_bilinear_u8_numba
    patch_stats = patch_stats_numba
else:
    resize_bilinear_u8_numba = None
    patch_stats_numba = None
    resize_bilinear_u8 = resize_bilinear_u8_numpy
    patch_stats = patch_stats_numpy
