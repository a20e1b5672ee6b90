"""Slow, obviously-correct reference implementations used as test oracles."""

from __future__ import annotations

import itertools
import math

import numpy as np


def perfect_matchings(items):
    """All perfect matchings of an even-length list, as lists of pairs."""
    items = list(items)
    if not items:
        yield []
        return
    first = items[0]
    for j in range(1, len(items)):
        rest = items[1:j] + items[j + 1:]
        for m in perfect_matchings(rest):
            yield [(first, items[j])] + m


def brute_min_matching(d: np.ndarray) -> float:
    n = d.shape[0]
    return min(sum(d[i, j] for i, j in m) for m in perfect_matchings(range(n)))


def hat_matrix(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, float)
    return q @ np.linalg.pinv(q.T @ q) @ q.T


def se_direct(l: np.ndarray, q: np.ndarray) -> float:
    """Leverage-corrected standard error straight from the explicit hat matrix."""
    n = len(l)
    h = hat_matrix(q)
    lt = l / np.sqrt(1.0 - np.diag(h))
    return math.sqrt(max(float(lt @ (np.eye(n) - h) @ lt), 0.0)) / n


def studentized(l: np.ndarray, q: np.ndarray) -> float:
    se = se_direct(l, q)
    m = float(np.mean(l))
    scale = float(np.max(np.abs(l)))
    if se <= 1e-12 * max(scale, 1e-300):
        return math.inf if m > 1e-12 * scale else -math.inf
    return m / se


def exact_tail(abs_zeta, gamma, q, t_obs) -> float:
    """``P(A >= t_obs)`` over every sign vector, one at a time."""
    abs_zeta = np.asarray(abs_zeta, float)
    n = len(abs_zeta)
    theta = gamma / (1.0 + gamma)
    kappa = (gamma - 1.0) / (gamma + 1.0)
    total = 0.0
    for signs in itertools.product((1.0, -1.0), repeat=n):
        v = np.array(signs)
        prob = 1.0
        for s, a in zip(v, abs_zeta):
            if a != 0:
                prob *= theta if s > 0 else 1.0 - theta
        # pairs with |zeta| = 0 are counted once, with their sign fixed to +1
        if np.any((v < 0) & (abs_zeta == 0)):
            continue
        a_stat = studentized((v - kappa) * abs_zeta, q)
        if a_stat >= t_obs - 1e-9 * max(1.0, abs(t_obs)):
            total += prob
    return total


def assignment_moments(zeta_if_first, zeta_if_second, pi_first, gamma, q):
    """Exact ``var(mean L)`` and ``E se^2`` over all ``2^n`` encouragement vectors.

    Pair ``i`` has its first unit encouraged with probability ``pi_first[i]``
    (independently across pairs), which yields ``zeta_if_first[i]``;
    otherwise it yields ``zeta_if_second[i]``.
    """
    n = len(zeta_if_first)
    kappa = (gamma - 1.0) / (gamma + 1.0)
    means, probs, ses = [], [], []
    for pick in itertools.product((0, 1), repeat=n):
        pick = np.array(pick)
        zeta = np.where(pick == 0, zeta_if_first, zeta_if_second)
        prob = float(np.prod(np.where(pick == 0, pi_first, 1.0 - pi_first)))
        l = zeta - kappa * np.abs(zeta)
        means.append(l.mean())
        probs.append(prob)
        ses.append(se_direct(l, q) ** 2)
    means, probs, ses = map(np.array, (means, probs, ses))
    mu = probs @ means
    return float(probs @ (means - mu) ** 2), float(probs @ ses)


def f_stat_direct(zeta, q):
    n = len(zeta)
    h = hat_matrix(q)
    p = np.linalg.matrix_rank(q)
    sse0 = float(np.sum((zeta - zeta.mean()) ** 2))
    r = zeta - h @ zeta
    sse1 = float(r @ r)
    if sse1 <= 1e-12 * sse0:
        return math.inf
    return ((sse0 - sse1) / (p - 1)) / (sse1 / (n - p))
