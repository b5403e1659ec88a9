"""Numba pairwise-force accumulators.

All kernels take component-major (d, N) float64 arrays so the inner source
loop runs over contiguous memory and vectorizes.  Parallelism is one
target row per prange iteration; each target's sum is accumulated serially
in source order, so results are bitwise identical for any worker count.

The weight applied to a separation vector is max(|diff|, r_N)^(-e); the
self pair (diff = 0) contributes exactly zero because the numerator
vanishes while the clipped denominator stays positive.
"""

import numpy as np
from numba import njit, prange


@njit(parallel=True, fastmath=True, cache=True)
def acc_d2_e2(tx, ty, sx, sy, rn2, coef, ox, oy):
    # Newtonian cut-off in d=2: weight 1 / max(r^2, rn^2)
    n = tx.shape[0]
    m = sx.shape[0]
    for i in prange(n):
        x0 = tx[i]
        x1 = ty[i]
        a0 = 0.0
        a1 = 0.0
        for j in range(m):
            d0 = x0 - sx[j]
            d1 = x1 - sy[j]
            b2 = max(d0 * d0 + d1 * d1, rn2)
            w = 1.0 / b2
            a0 += d0 * w
            a1 += d1 * w
        ox[i] = coef * a0
        oy[i] = coef * a1


@njit(parallel=True, fastmath=True, cache=True)
def acc_d3_e3(tx, ty, tz, sx, sy, sz, rn2, coef, ox, oy, oz):
    # Newtonian cut-off in d=3: weight 1 / max(r, rn)^3
    n = tx.shape[0]
    m = sx.shape[0]
    for i in prange(n):
        x0 = tx[i]
        x1 = ty[i]
        x2 = tz[i]
        a0 = 0.0
        a1 = 0.0
        a2 = 0.0
        for j in range(m):
            d0 = x0 - sx[j]
            d1 = x1 - sy[j]
            d2 = x2 - sz[j]
            b2 = max(d0 * d0 + d1 * d1 + d2 * d2, rn2)
            w = 1.0 / (b2 * np.sqrt(b2))
            a0 += d0 * w
            a1 += d1 * w
            a2 += d2 * w
        ox[i] = coef * a0
        oy[i] = coef * a1
        oz[i] = coef * a2


@njit(parallel=True, fastmath=True, cache=True)
def acc_d3_e15(tx, ty, tz, sx, sy, sz, rn2, coef, ox, oy, oz):
    # power cut-off alpha = 1/2 in d=3: weight 1 / max(r, rn)^1.5,
    # b2^(-3/4) written as two square roots to avoid pow in the hot loop
    n = tx.shape[0]
    m = sx.shape[0]
    for i in prange(n):
        x0 = tx[i]
        x1 = ty[i]
        x2 = tz[i]
        a0 = 0.0
        a1 = 0.0
        a2 = 0.0
        for j in range(m):
            d0 = x0 - sx[j]
            d1 = x1 - sy[j]
            d2 = x2 - sz[j]
            b2 = max(d0 * d0 + d1 * d1 + d2 * d2, rn2)
            s = np.sqrt(b2)
            w = 1.0 / (s * np.sqrt(s))
            a0 += d0 * w
            a1 += d1 * w
            a2 += d2 * w
        ox[i] = coef * a0
        oy[i] = coef * a1
        oz[i] = coef * a2


@njit(parallel=True, fastmath=True, cache=True)
def acc_generic(xt, xs, rn2, neg_half_e, coef, out):
    # any dimension, any exponent: weight = max(r^2, rn^2)^(-e/2)
    d = xt.shape[0]
    n = xt.shape[1]
    m = xs.shape[1]
    for i in prange(n):
        acc = np.zeros(d)
        for j in range(m):
            r2 = 0.0
            for k in range(d):
                dk = xt[k, i] - xs[k, j]
                r2 += dk * dk
            w = max(r2, rn2) ** neg_half_e
            for k in range(d):
                acc[k] += (xt[k, i] - xs[k, j]) * w
        for k in range(d):
            out[k, i] = coef * acc[k]


@njit(parallel=True, fastmath=True, cache=True)
def pair_field_sup_gap(xt, xs, hfull, rn2, neg_half_e):
    """max_i |mean_j h(x_i - s_j) - hfull[:, i]| for the LLN statistic."""
    d = xt.shape[0]
    n = xt.shape[1]
    m = xs.shape[1]
    worst = 0.0
    for i in prange(n):
        acc = np.zeros(d)
        for j in range(m):
            r2 = 0.0
            for k in range(d):
                dk = xt[k, i] - xs[k, j]
                r2 += dk * dk
            w = max(r2, rn2) ** neg_half_e
            for k in range(d):
                acc[k] += (xt[k, i] - xs[k, j]) * w
        g2 = 0.0
        for k in range(d):
            diff = acc[k] / m - hfull[k, i]
            g2 += diff * diff
        worst = max(worst, np.sqrt(g2))
    return worst
