"""Dense O(n^3) weighted blossom algorithm on integer weights.

Vertices are 1-based; index 0 means "none".  Blossoms take indices
``n+1 .. 2n``.  Dual labels are stored doubled so that all arithmetic stays
in int64.  The recursive steps of the textbook formulation (queue push,
top-blossom assignment, matching along a blossom) are unrolled with
explicit stacks so the whole thing compiles under numba.
"""

from __future__ import annotations

import numpy as np
from numba import njit

INF = np.int64(1) << np.int64(62)


@njit(cache=True)
def _delta(lab, gu, gv, gw, a, b):
    u = gu[a, b]
    v = gv[a, b]
    return lab[u] + lab[v] - gw[u, v] * 2


@njit(cache=True)
def _update_slack(lab, gu, gv, gw, slack, u, x):
    if slack[x] == 0 or _delta(lab, gu, gv, gw, u, x) < _delta(lab, gu, gv, gw, slack[x], x):
        slack[x] = u


@njit(cache=True)
def _set_slack(n, lab, gu, gv, gw, slack, st, S, x):
    slack[x] = 0
    for u in range(1, n + 1):
        if gw[u, x] > 0 and st[u] != x and S[st[u]] == 0:
            _update_slack(lab, gu, gv, gw, slack, u, x)


@njit(cache=True)
def _q_push(n, flower, flen, queue, qstate, x):
    stack = [x]
    while len(stack) > 0:
        y = stack.pop()
        if y <= n:
            tail = qstate[1]
            if tail >= queue.shape[0]:
                grown = np.zeros(queue.shape[0] * 2, dtype=np.int64)
                grown[:tail] = queue[:tail]
                queue = grown
            queue[tail] = y
            qstate[1] = tail + 1
        else:
            for i in range(flen[y] - 1, -1, -1):
                stack.append(flower[y, i])
    return queue


@njit(cache=True)
def _set_st(n, flower, flen, st, x, b):
    stack = [x]
    while len(stack) > 0:
        y = stack.pop()
        st[y] = b
        if y > n:
            for i in range(flen[y]):
                stack.append(flower[y, i])


@njit(cache=True)
def _get_pr(flower, flen, b, xr):
    m = flen[b]
    pr = 0
    while flower[b, pr] != xr:
        pr += 1
    if pr % 2 == 1:
        flower[b, 1:m] = flower[b, 1:m][::-1].copy()
        return m - pr
    return pr


@njit(cache=True)
def _set_match(n, gu, gv, flower, flen, flower_from, match, u0, v0):
    su = [u0]
    sv = [v0]
    while len(su) > 0:
        u = su.pop()
        v = sv.pop()
        match[u] = gv[u, v]
        if u > n:
            xr = flower_from[u, gu[u, v]]
            pr = _get_pr(flower, flen, u, xr)
            for i in range(pr):
                su.append(flower[u, i])
                sv.append(flower[u, i ^ 1])
            su.append(xr)
            sv.append(v)
            m = flen[u]
            rotated = np.concatenate((flower[u, pr:m], flower[u, :pr]))
            flower[u, :m] = rotated


@njit(cache=True)
def _augment(n, gu, gv, flower, flen, flower_from, match, st, pa, u, v):
    while True:
        xnv = st[match[u]]
        _set_match(n, gu, gv, flower, flen, flower_from, match, u, v)
        if xnv == 0:
            return
        _set_match(n, gu, gv, flower, flen, flower_from, match, xnv, st[pa[xnv]])
        u = st[pa[xnv]]
        v = xnv


@njit(cache=True)
def _get_lca(match, st, pa, vis, stamp, u, v):
    stamp[0] += 1
    t = stamp[0]
    while u != 0 or v != 0:
        if u != 0:
            if vis[u] == t:
                return u
            vis[u] = t
            u = st[match[u]]
            if u != 0:
                u = st[pa[u]]
        u, v = v, u
    return 0


@njit(cache=True)
def _add_blossom(n, nx, lab, gu, gv, gw, match, slack, st, pa, S,
                 flower, flen, flower_from, queue, qstate, u, lca, v):
    b = n + 1
    while b <= nx[0] and st[b] != 0:
        b += 1
    if b > nx[0]:
        nx[0] += 1
    lab[b] = 0
    S[b] = 0
    match[b] = match[lca]
    flower[b, 0] = lca
    m = 1
    x = u
    while x != lca:
        flower[b, m] = x
        y = st[match[x]]
        flower[b, m + 1] = y
        m += 2
        queue = _q_push(n, flower, flen, queue, qstate, y)
        x = st[pa[y]]
    flower[b, 1:m] = flower[b, 1:m][::-1].copy()
    x = v
    while x != lca:
        flower[b, m] = x
        y = st[match[x]]
        flower[b, m + 1] = y
        m += 2
        queue = _q_push(n, flower, flen, queue, qstate, y)
        x = st[pa[y]]
    flen[b] = m
    _set_st(n, flower, flen, st, b, b)
    for x in range(1, nx[0] + 1):
        gw[b, x] = 0
        gw[x, b] = 0
    for x in range(1, n + 1):
        flower_from[b, x] = 0
    for i in range(m):
        xs = flower[b, i]
        for x in range(1, nx[0] + 1):
            if gw[b, x] == 0 or _delta(lab, gu, gv, gw, xs, x) < _delta(lab, gu, gv, gw, b, x):
                gu[b, x] = gu[xs, x]
                gv[b, x] = gv[xs, x]
                gw[b, x] = gw[xs, x]
                gu[x, b] = gu[x, xs]
                gv[x, b] = gv[x, xs]
                gw[x, b] = gw[x, xs]
        for x in range(1, n + 1):
            if flower_from[xs, x] != 0:
                flower_from[b, x] = xs
    _set_slack(n, lab, gu, gv, gw, slack, st, S, b)
    return queue


@njit(cache=True)
def _expand_blossom(n, lab, gu, gv, gw, slack, st, pa, S,
                    flower, flen, flower_from, queue, qstate, b):
    for i in range(flen[b]):
        _set_st(n, flower, flen, st, flower[b, i], flower[b, i])
    xr = flower_from[b, gu[b, pa[b]]]
    pr = _get_pr(flower, flen, b, xr)
    for i in range(0, pr, 2):
        xs = flower[b, i]
        xns = flower[b, i + 1]
        pa[xs] = gu[xns, xs]
        S[xs] = 1
        S[xns] = 0
        slack[xs] = 0
        _set_slack(n, lab, gu, gv, gw, slack, st, S, xns)
        queue = _q_push(n, flower, flen, queue, qstate, xns)
    S[xr] = 1
    pa[xr] = pa[b]
    for i in range(pr + 1, flen[b]):
        xs = flower[b, i]
        S[xs] = -1
        _set_slack(n, lab, gu, gv, gw, slack, st, S, xs)
    st[b] = 0
    return queue


@njit(cache=True)
def _on_found_edge(n, nx, lab, gu, gv, gw, match, slack, st, pa, S, vis, stamp,
                   flower, flen, flower_from, queue, qstate, eu, ev):
    """Returns (augmented, queue)."""
    u = st[eu]
    v = st[ev]
    if S[v] == -1:
        pa[v] = eu
        S[v] = 1
        nu = st[match[v]]
        slack[v] = 0
        slack[nu] = 0
        S[nu] = 0
        queue = _q_push(n, flower, flen, queue, qstate, nu)
    elif S[v] == 0:
        lca = _get_lca(match, st, pa, vis, stamp, u, v)
        if lca == 0:
            _augment(n, gu, gv, flower, flen, flower_from, match, st, pa, u, v)
            _augment(n, gu, gv, flower, flen, flower_from, match, st, pa, v, u)
            return True, queue
        queue = _add_blossom(n, nx, lab, gu, gv, gw, match, slack, st, pa, S,
                             flower, flen, flower_from, queue, qstate, u, lca, v)
    return False, queue


@njit(cache=True)
def _stage(n, nx, lab, gu, gv, gw, match, slack, st, pa, S, vis, stamp,
           flower, flen, flower_from, queue, qstate):
    """One augmentation phase; returns (augmented, queue)."""
    for x in range(1, nx[0] + 1):
        S[x] = -1
        slack[x] = 0
    qstate[0] = 0
    qstate[1] = 0
    for x in range(1, nx[0] + 1):
        if st[x] == x and match[x] == 0:
            pa[x] = 0
            S[x] = 0
            queue = _q_push(n, flower, flen, queue, qstate, x)
    if qstate[1] == 0:
        return False, queue
    while True:
        while qstate[0] < qstate[1]:
            u = queue[qstate[0]]
            qstate[0] += 1
            if S[st[u]] == 1:
                continue
            for v in range(1, n + 1):
                if gw[u, v] > 0 and st[u] != st[v]:
                    if _delta(lab, gu, gv, gw, u, v) == 0:
                        found, queue = _on_found_edge(
                            n, nx, lab, gu, gv, gw, match, slack, st, pa, S, vis, stamp,
                            flower, flen, flower_from, queue, qstate, u, v)
                        if found:
                            return True, queue
                    else:
                        _update_slack(lab, gu, gv, gw, slack, u, st[v])
        d = INF
        for b in range(n + 1, nx[0] + 1):
            if st[b] == b and S[b] == 1:
                d = min(d, lab[b] // 2)
        for x in range(1, nx[0] + 1):
            if st[x] == x and slack[x] != 0:
                if S[x] == -1:
                    d = min(d, _delta(lab, gu, gv, gw, slack[x], x))
                elif S[x] == 0:
                    d = min(d, _delta(lab, gu, gv, gw, slack[x], x) // 2)
        for u in range(1, n + 1):
            if S[st[u]] == 0:
                if lab[u] <= d:
                    return False, queue
                lab[u] -= d
            elif S[st[u]] == 1:
                lab[u] += d
        for b in range(n + 1, nx[0] + 1):
            if st[b] == b:
                if S[st[b]] == 0:
                    lab[b] += d * 2
                elif S[st[b]] == 1:
                    lab[b] -= d * 2
        qstate[0] = 0
        qstate[1] = 0
        for x in range(1, nx[0] + 1):
            if st[x] == x and slack[x] != 0 and st[slack[x]] != x:
                if _delta(lab, gu, gv, gw, slack[x], x) == 0:
                    found, queue = _on_found_edge(
                        n, nx, lab, gu, gv, gw, match, slack, st, pa, S, vis, stamp,
                        flower, flen, flower_from, queue, qstate,
                        gu[slack[x], x], gv[slack[x], x])
                    if found:
                        return True, queue
        for b in range(n + 1, nx[0] + 1):
            if st[b] == b and S[b] == 1 and lab[b] == 0:
                queue = _expand_blossom(n, lab, gu, gv, gw, slack, st, pa, S,
                                        flower, flen, flower_from, queue, qstate, b)


@njit(cache=True)
def max_weight_matching_dense(w):
    """Maximum-weight matching of a dense symmetric int64 weight matrix.

    ``w`` is ``n x n`` (0-based); entries ``<= 0`` are non-edges.  Returns
    ``mate`` with ``mate[i] = j`` (0-based) or ``-1`` when unmatched.
    """
    n = w.shape[0]
    size = 2 * n + 2
    gu = np.zeros((size, size), dtype=np.int64)
    gv = np.zeros((size, size), dtype=np.int64)
    gw = np.zeros((size, size), dtype=np.int64)
    w_max = np.int64(0)
    for u in range(1, n + 1):
        for v in range(1, n + 1):
            gu[u, v] = u
            gv[u, v] = v
            if u != v:
                gw[u, v] = w[u - 1, v - 1]
                if gw[u, v] > w_max:
                    w_max = gw[u, v]
    lab = np.zeros(size, dtype=np.int64)
    match = np.zeros(size, dtype=np.int64)
    slack = np.zeros(size, dtype=np.int64)
    st = np.zeros(size, dtype=np.int64)
    pa = np.zeros(size, dtype=np.int64)
    S = np.zeros(size, dtype=np.int64)
    vis = np.zeros(size, dtype=np.int64)
    stamp = np.zeros(1, dtype=np.int64)
    flower = np.zeros((size, n + 2), dtype=np.int64)
    flen = np.zeros(size, dtype=np.int64)
    flower_from = np.zeros((size, n + 1), dtype=np.int64)
    queue = np.zeros(4 * size, dtype=np.int64)
    qstate = np.zeros(2, dtype=np.int64)
    nx = np.zeros(1, dtype=np.int64)
    nx[0] = n
    for u in range(0, n + 1):
        st[u] = u
    for u in range(1, n + 1):
        flower_from[u, u] = u
        lab[u] = w_max
    while True:
        found, queue = _stage(n, nx, lab, gu, gv, gw, match, slack, st, pa, S, vis, stamp,
                              flower, flen, flower_from, queue, qstate)
        if not found:
            break
    mate = np.full(n, -1, dtype=np.int64)
    for u in range(1, n + 1):
        if match[u] != 0:
            mate[u - 1] = match[u] - 1
    return mate
