"""Compiled inner loops for reference draws.

Each kernel turns a matrix of uniforms into studentized bounding
statistics without materializing the sign matrix.  Residuals are formed
explicitly so that draws with zero spread come out as exact zeros.
"""

import numpy as np
from numba import njit

_TINY = np.finfo(np.float64).tiny


@njit(cache=True, inline="always")
def _finish(b_sum, rss, bmax, n, zero_rtol, truncate):
    b_bar = b_sum / n
    se = np.sqrt(rss) / n
    if se <= zero_rtol * max(bmax, _TINY):
        a = np.inf if b_bar > zero_rtol * bmax else -np.inf
    else:
        a = b_bar / se
    if truncate and a < 0.0:
        a = 0.0
    return a


@njit(cache=True)
def draws_groups(u, theta, kappa, absz, scale, grp, gsize, zero_rtol, truncate):
    m, n = u.shape
    ng = gsize.shape[0]
    out = np.empty(m)
    bt = np.empty(n)
    gsum = np.empty(ng)
    for r in range(m):
        for g in range(ng):
            gsum[g] = 0.0
        b_sum = 0.0
        bmax = 0.0
        for i in range(n):
            # branch-free sign: the comparison is a coin flip at theta = 1/2
            v = 1.0 if u[r, i] < theta else -1.0
            b = (v - kappa) * absz[i]
            b_sum += b
            bmax = max(bmax, abs(b))
            bt[i] = b * scale[i]
            gsum[grp[i]] += bt[i]
        rss = 0.0
        for i in range(n):
            e = bt[i] - gsum[grp[i]] / gsize[grp[i]]
            rss += e * e
        out[r] = _finish(b_sum, rss, bmax, n, zero_rtol, truncate)
    return out


@njit(cache=True)
def draws_basis(u, theta, kappa, absz, scale, basis_t, zero_rtol, truncate):
    """``basis_t`` is the transposed orthonormal basis, shape ``(p, n)``."""
    m, n = u.shape
    p = basis_t.shape[0]
    out = np.empty(m)
    bt = np.empty(n)
    res = np.empty(n)
    for r in range(m):
        b_sum = 0.0
        bmax = 0.0
        for i in range(n):
            v = 1.0 if u[r, i] < theta else -1.0
            b = (v - kappa) * absz[i]
            b_sum += b
            bmax = max(bmax, abs(b))
            bt[i] = b * scale[i]
            res[i] = bt[i]
        for k in range(p):
            c = 0.0
            for i in range(n):
                c += basis_t[k, i] * bt[i]
            for i in range(n):
                res[i] -= basis_t[k, i] * c
        rss = 0.0
        for i in range(n):
            rss += res[i] * res[i]
        out[r] = _finish(b_sum, rss, bmax, n, zero_rtol, truncate)
    return out
