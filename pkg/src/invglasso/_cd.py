"""Numba kernels for the weighted-lasso coordinate descent inner loop.

These run thousands of times per regularization path, so they are kept
free of Python objects and compiled with caching enabled.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def lasso_gram_cd(w11, s12, p12, beta, tol, max_passes):
    """Coordinate descent for 0.5 b'Wb - s'b + sum_k p_k |b_k|.

    `w11` must be symmetric positive definite, `p12` nonnegative.
    `beta` is updated in place (warm start in, solution out).  Returns
    the number of full passes performed.
    """
    d = beta.shape[0]
    v = w11 @ beta
    passes = 0
    for _ in range(max_passes):
        passes += 1
        max_step = 0.0
        max_beta = 1.0
        for k in range(d):
            bk = beta[k]
            # partial residual excluding coordinate k's own contribution
            u = s12[k] - (v[k] - w11[k, k] * bk)
            thr = p12[k]
            if u > thr:
                nb = (u - thr) / w11[k, k]
            elif u < -thr:
                nb = (u + thr) / w11[k, k]
            else:
                nb = 0.0
            step = nb - bk
            if step != 0.0:
                beta[k] = nb
                for m in range(d):
                    v[m] += step * w11[m, k]
                if abs(step) > max_step:
                    max_step = abs(step)
            if abs(beta[k]) > max_beta:
                max_beta = abs(beta[k])
        if max_step <= tol * max_beta:
            break
    return passes


@njit(cache=True)
def glasso_sweep(s, p, w, b, inner_tol, inner_max_passes):
    """One full block-coordinate sweep over the columns of W = inv(Omega).

    For each column j the off-diagonal block solves a lasso with
    entrywise weights p[, j]; `w` (working covariance) and `b` (lasso
    coefficients per column) are updated in place.  Returns the largest
    absolute change applied to an entry of `w`.
    """
    dim = s.shape[0]
    m = dim - 1
    w11 = np.empty((m, m))
    s12 = np.empty(m)
    p12 = np.empty(m)
    beta = np.empty(m)
    max_change = 0.0
    for j in range(dim):
        r = 0
        for a in range(dim):
            if a == j:
                continue
            s12[r] = s[a, j]
            p12[r] = p[a, j]
            beta[r] = b[a, j]
            c = 0
            for col in range(dim):
                if col == j:
                    continue
                w11[r, c] = w[a, col]
                c += 1
            r += 1
        lasso_gram_cd(w11, s12, p12, beta, inner_tol, inner_max_passes)
        r = 0
        for a in range(dim):
            if a == j:
                continue
            w_new = 0.0
            for c in range(m):
                w_new += w11[r, c] * beta[c]
            change = abs(w_new - w[a, j])
            if change > max_change:
                max_change = change
            w[a, j] = w_new
            w[j, a] = w_new
            b[a, j] = beta[r]
            r += 1
    return max_change
