"""Compiled inner loops for conv/pool layers.

Plain nested loops, jitted; no fastmath and no parallelism, so results are
IEEE-deterministic with a fixed summation order.  Layout is NCHW.  Conv
layers use 'same' zero padding via an explicitly padded scratch copy: the
full-width inner loops this allows vectorize far better than border-aware
range clipping.  Pooling uses non-overlapping windows with floor semantics
(trailing rows/columns that do not fill a window are dropped).
"""

from __future__ import annotations

from numba import njit


@njit(cache=True)
def pad_into(x, xp):
    """Copy x into the center of the zeroed scratch buffer xp."""
    n_batch, c, h, w = x.shape
    p = (xp.shape[2] - h) // 2
    xp[:] = 0.0
    for n in range(n_batch):
        for ci in range(c):
            for y in range(h):
                for xx in range(w):
                    xp[n, ci, y + p, xx + p] = x[n, ci, y, xx]


@njit(cache=True)
def conv2d_forward(xp, w, b, out):
    """Cross-correlate padded input (N,Ci,H+2p,W+2p) with kernels (Co,Ci,K,K)."""
    n_batch, c_in, hp, wp = xp.shape
    c_out = w.shape[0]
    k = w.shape[2]
    h_out = hp - (k - 1)
    w_out = wp - (k - 1)
    for n in range(n_batch):
        for co in range(c_out):
            o = out[n, co]
            for y in range(h_out):
                for x in range(w_out):
                    o[y, x] = b[co]
            for ci in range(c_in):
                xc = xp[n, ci]
                for ky in range(k):
                    for kx in range(k):
                        wv = w[co, ci, ky, kx]
                        for y in range(h_out):
                            row = xc[y + ky]
                            orow = o[y]
                            for x in range(w_out):
                                orow[x] += wv * row[x + kx]


@njit(cache=True)
def conv2d_backward(xp, w, dy, dxp, dw, db):
    """Gradients of `conv2d_forward` w.r.t. padded input, kernels and bias."""
    n_batch, c_in, hp, wp = xp.shape
    c_out = w.shape[0]
    k = w.shape[2]
    h_out = hp - (k - 1)
    w_out = wp - (k - 1)
    dxp[:] = 0.0
    dw[:] = 0.0
    db[:] = 0.0
    for n in range(n_batch):
        for co in range(c_out):
            g2 = dy[n, co]
            s = 0.0
            for y in range(h_out):
                for x in range(w_out):
                    s += g2[y, x]
            db[co] += s
            for ci in range(c_in):
                xc = xp[n, ci]
                dxc = dxp[n, ci]
                for ky in range(k):
                    for kx in range(k):
                        wv = w[co, ci, ky, kx]
                        acc = 0.0
                        for y in range(h_out):
                            grow = g2[y]
                            xrow = xc[y + ky]
                            dxrow = dxc[y + ky]
                            for x in range(w_out):
                                g = grow[x]
                                acc += g * xrow[x + kx]
                                dxrow[x + kx] += g * wv
                        dw[co, ci, ky, kx] += acc


@njit(cache=True)
def maxpool_forward(x, p, out, argmax):
    """Max over p*p windows; ties go to the first element in row-major order."""
    n_batch, c, h, w = x.shape
    h_out = h // p
    w_out = w // p
    for n in range(n_batch):
        for ci in range(c):
            xc = x[n, ci]
            for y in range(h_out):
                for xo in range(w_out):
                    best = xc[y * p, xo * p]
                    best_idx = 0
                    for dy in range(p):
                        row = xc[y * p + dy]
                        for dx in range(p):
                            v = row[xo * p + dx]
                            idx = dy * p + dx
                            if v > best:
                                best = v
                                best_idx = idx
                    out[n, ci, y, xo] = best
                    argmax[n, ci, y, xo] = best_idx


@njit(cache=True)
def maxpool_backward(dy, argmax, p, dx):
    """Route each window gradient to its recorded argmax position."""
    n_batch, c, h_out, w_out = dy.shape
    dx[:] = 0.0
    for n in range(n_batch):
        for ci in range(c):
            for y in range(h_out):
                for xo in range(w_out):
                    idx = argmax[n, ci, y, xo]
                    dx[n, ci, y * p + idx // p, xo * p + idx % p] += dy[n, ci, y, xo]
