"""Compiled per-map compute kernels.

Each kernel is compiled twice from the same source: a serial variant used
when one worker is configured (no threading machinery at all) and a
parallel variant for more. Parallelism is over whole maps (forward, delta
pulling, pooling) or whole kernel blocks (weight gradients): every
parallel iteration owns a disjoint output slice and reduces sequentially
inside it, so results are bit-identical for any worker count, serial
included. Padding columns beyond each logical width are never read or
written.
"""

import os

# Lift numba's thread cap before it is imported so `--workers` above the
# visible core count still works; the active count is set explicitly.
os.environ.setdefault("NUMBA_NUM_THREADS", str(max(os.cpu_count() or 1, 8)))
# The workqueue layer parks idle workers instead of spin-waiting, which
# keeps multi-worker runs sane on shared or throttled hosts.
os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

import numba
import numpy as np
from numba import njit, prange

from .errors import ConfigError

_MAX_WORKERS = int(os.environ["NUMBA_NUM_THREADS"])

ACT_SCALE = 1.7159
ACT_GAIN = 0.6666

_workers = 1


def set_workers(n: int) -> None:
    """Worker threads used by all kernels; 1 selects the serial variants."""
    global _workers
    if n < 1:
        raise ConfigError(f"worker count must be >= 1, got {n}")
    _workers = min(n, _MAX_WORKERS)
    if _workers > 1:
        numba.set_num_threads(_workers)


def get_workers() -> int:
    return _workers


def max_workers() -> int:
    return _MAX_WORKERS


def _dual(py_func):
    """(serial, parallel) compilations of one kernel body."""
    serial = njit(cache=True)(py_func)
    parallel = njit(cache=True, parallel=True)(py_func)

    def dispatch(*args):
        if _workers == 1:
            return serial(*args)
        return parallel(*args)

    dispatch.__name__ = py_func.__name__
    dispatch.serial = serial
    dispatch.parallel = parallel
    return dispatch


@_dual
def conv_fwd(src, src_w, arena, fwd_offsets, fwd_srcs, fwd_widx,
             bias_off, kx, ky, sx, sy, a_out, y_out, out_w, out_h):
    tx = sx + 1
    ty = sy + 1
    for d in prange(a_out.shape[0]):
        for r in range(out_h):
            for c in range(out_w):
                acc = arena[bias_off[d]]
                for k in range(fwd_offsets[d], fwd_offsets[d + 1]):
                    s = fwd_srcs[k]
                    off = fwd_widx[k]
                    for v in range(ky):
                        row = r * ty + v
                        for u in range(kx):
                            acc += arena[off + v * kx + u] * src[s, row, c * tx + u]
                a_out[d, r, c] = acc
                y_out[d, r, c] = ACT_SCALE * np.tanh(ACT_GAIN * acc)


@_dual
def pull_bwd(delta_next, dest_w, dest_h, arena,
             bwd_offsets, bwd_dests, bwd_widx,
             kx, ky, sx, sy, out, src_w, src_h):
    # Gather form: each source cell sums the rectangle of destination cells
    # whose kernels cover it, so every output cell has exactly one writer.
    tx = sx + 1
    ty = sy + 1
    for s in prange(out.shape[0]):
        for j in range(src_h):
            ylo = -((-(j - ky + 1)) // ty)
            if ylo < 0:
                ylo = 0
            yhi = j // ty
            if yhi > dest_h - 1:
                yhi = dest_h - 1
            for i in range(src_w):
                xlo = -((-(i - kx + 1)) // tx)
                if xlo < 0:
                    xlo = 0
                xhi = i // tx
                if xhi > dest_w - 1:
                    xhi = dest_w - 1
                acc = 0.0
                for k in range(bwd_offsets[s], bwd_offsets[s + 1]):
                    d = bwd_dests[k]
                    off = bwd_widx[k]
                    for y in range(ylo, yhi + 1):
                        wrow = off + (j - y * ty) * kx
                        for x in range(xlo, xhi + 1):
                            acc += delta_next[d, y, x] * arena[wrow + (i - x * tx)]
                out[s, j, i] = acc


@_dual
def weight_grad(delta_next, dest_w, dest_h, y_prev,
                pair_dest, pair_src, pair_off,
                kx, ky, sx, sy, g_arena):
    tx = sx + 1
    ty = sy + 1
    for p in prange(pair_dest.shape[0]):
        d = pair_dest[p]
        s = pair_src[p]
        off = pair_off[p]
        for v in range(ky):
            for u in range(kx):
                acc = 0.0
                for r in range(dest_h):
                    row = r * ty + v
                    for c in range(dest_w):
                        acc += delta_next[d, r, c] * y_prev[s, row, c * tx + u]
                g_arena[off + v * kx + u] = acc


@_dual
def bias_grad(delta_next, dest_w, dest_h, bias_off, g_arena):
    for d in prange(delta_next.shape[0]):
        acc = 0.0
        for r in range(dest_h):
            for c in range(dest_w):
                acc += delta_next[d, r, c]
        g_arena[bias_off[d]] = acc


@_dual
def maxpool_fwd(src, px, py, out, out_w, out_h, arg_r, arg_c):
    # Ties keep the first cell in row-major scan order (strict > below).
    for m in prange(src.shape[0]):
        for r in range(out_h):
            for c in range(out_w):
                best_r = r * py
                best_c = c * px
                best = src[m, best_r, best_c]
                for v in range(py):
                    for u in range(px):
                        val = src[m, r * py + v, c * px + u]
                        if val > best:
                            best = val
                            best_r = r * py + v
                            best_c = c * px + u
                out[m, r, c] = best
                arg_r[m, r, c] = best_r
                arg_c[m, r, c] = best_c


@_dual
def maxpool_bwd(delta_next, out_w, out_h, arg_r, arg_c, delta_prev):
    for m in prange(delta_next.shape[0]):
        for r in range(out_h):
            for c in range(out_w):
                delta_prev[m, arg_r[m, r, c], arg_c[m, r, c]] += delta_next[m, r, c]
