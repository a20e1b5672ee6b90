"""Pairing matched pairs with similar covariates.

Pair means are compared by Mahalanobis distance and grouped by an exact
minimum-weight perfect matching.  With an odd number of pairs a zero-cost
ghost absorbs one pair, which is then attached to the closest couple to
form a single triple.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._blossom import max_weight_matching_dense

log = logging.getLogger(__name__)

GREEDY_THRESHOLD = 5000


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    d: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.d, float)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise ValueError("distance matrix must be square")
        if not np.isfinite(d).all():
            raise ValueError("distance matrix has non-finite entries")
        if not np.allclose(d, d.T, rtol=1e-10, atol=1e-12):
            raise ValueError("distance matrix must be symmetric")
        if np.any(np.diag(d) != 0) or np.any(d < 0):
            raise ValueError("distances must be nonnegative with zero diagonal")
        object.__setattr__(self, "d", d)

    @property
    def n(self) -> int:
        return self.d.shape[0]


@dataclass(frozen=True, eq=False)
class PairsOfPairs:
    """``partner[i]`` is the couple partner of pair ``i`` (``-1`` inside the triple)."""

    partner: np.ndarray
    triple: Optional[tuple]
    total_distance: float

    @property
    def n(self) -> int:
        return self.partner.shape[0]

    def groups(self) -> np.ndarray:
        """Group label per pair: couples get ``min(i, partner)``, the triple its smallest member."""
        g = np.where(self.partner >= 0, np.minimum(np.arange(self.n), self.partner), -1)
        if self.triple is not None:
            g[list(self.triple)] = min(self.triple)
        return g

    def couples(self) -> list:
        return [(i, int(j)) for i, j in enumerate(self.partner) if j > i]


def mahalanobis_matrix(pair_means) -> DistanceMatrix:
    """Squared Mahalanobis distances between rows of ``pair_means``.

    A singular covariance gets a ridge of ``1e-8 * trace(S) / k``.
    """
    x = np.asarray(pair_means, float)
    if x.ndim == 1:
        x = x[:, None]
    n, k = x.shape
    if n < 2:
        raise ValueError("need at least two rows")
    if k == 0:
        log.warning("no covariates: all Mahalanobis distances are zero")
        return DistanceMatrix(np.zeros((n, n)))
    s = np.atleast_2d(np.cov(x, rowvar=False))
    tr = float(np.trace(s))
    if tr == 0.0:
        return DistanceMatrix(np.zeros((n, n)))
    if np.linalg.matrix_rank(s) < k:
        s = s + (1e-8 * tr / k) * np.eye(k)
    # whiten with the Cholesky factor: d_ij = ||L^-1 (x_i - x_j)||^2
    chol = np.linalg.cholesky(s)
    w = np.linalg.solve(chol, (x - x.mean(axis=0)).T).T
    sq = np.sum(w ** 2, axis=1)
    d = sq[:, None] + sq[None, :] - 2.0 * (w @ w.T)
    d = np.maximum((d + d.T) / 2.0, 0.0)
    np.fill_diagonal(d, 0.0)
    return DistanceMatrix(d)


def _as_matrix(d) -> np.ndarray:
    return d.d if isinstance(d, DistanceMatrix) else DistanceMatrix(d).d


def _blossom_pairs(d: np.ndarray) -> np.ndarray:
    """Exact minimum-weight perfect matching of an even-sized complete graph."""
    n = d.shape[0]
    dmax = float(d.max())
    bits = max(20, min(40, 60 - int(math.ceil(math.log2(n + 1))) - 2))
    unit = np.int64(1) << np.int64(bits)
    if dmax > 0:
        w_int = np.rint(d / dmax * float(unit)).astype(np.int64)
    else:
        w_int = np.zeros((n, n), dtype=np.int64)
    # a perfect matching beats any smaller one once the offset exceeds n/2 * unit
    offset = np.int64(n // 2) * unit + np.int64(1)
    w = offset - w_int
    np.fill_diagonal(w, 0)
    mate = max_weight_matching_dense(w)
    if np.any(mate < 0):
        raise RuntimeError("blossom matching did not return a perfect matching")
    return mate.astype(int)


def _greedy_pairs(d: np.ndarray) -> np.ndarray:
    n = d.shape[0]
    mate = np.full(n, -1)
    iu, ju = np.triu_indices(n, 1)
    for e in np.argsort(d[iu, ju], kind="stable"):
        i, j = iu[e], ju[e]
        if mate[i] < 0 and mate[j] < 0:
            mate[i], mate[j] = j, i
    return mate


def min_weight_pairing(d, greedy: Optional[bool] = None) -> PairsOfPairs:
    """Minimum total-distance partition of an even number of pairs into couples.

    ``greedy=None`` picks the exact blossom engine up to
    ``GREEDY_THRESHOLD`` pairs.  The greedy engine is not optimal, but any
    fixed pairing still yields a conservative standard error.
    """
    d = _as_matrix(d)
    n = d.shape[0]
    if n < 2 or n % 2:
        raise ValueError(f"need an even number of at least 2 pairs, got {n}")
    if greedy is None:
        greedy = n > GREEDY_THRESHOLD
    if greedy:
        log.warning("greedy pairing: total distance is not guaranteed minimal")
        mate = _greedy_pairs(d)
    else:
        mate = _blossom_pairs(d)
    total = float(sum(d[i, mate[i]] for i in range(n) if mate[i] > i))
    return PairsOfPairs(mate, None, total)


def pair_odd(d, greedy: Optional[bool] = None) -> PairsOfPairs:
    """Couples plus one triple for an odd number of pairs.

    The pair left with the ghost joins the couple minimizing the sum of its
    two new distances.
    """
    d = _as_matrix(d)
    n = d.shape[0]
    if n < 3 or n % 2 == 0:
        raise ValueError(f"need an odd number of at least 3 pairs, got {n}")
    if n == 3:
        return PairsOfPairs(np.full(3, -1), (0, 1, 2), float(d[0, 1] + d[0, 2] + d[1, 2]))
    ext = np.zeros((n + 1, n + 1))
    ext[:n, :n] = d
    base = min_weight_pairing(ext, greedy=greedy)
    mate = base.partner[:n].copy()
    lone = int(np.flatnonzero(mate == n)[0])
    mate[lone] = -1
    best, best_cost = None, np.inf
    for i in range(n):
        j = mate[i]
        if j > i:
            cost = d[lone, i] + d[lone, j]
            if cost < best_cost:
                best, best_cost = (i, int(j)), cost
    i, j = best
    mate[i] = mate[j] = -1
    triple = tuple(sorted((lone, i, j)))
    total = float(sum(d[a, mate[a]] for a in range(n) if mate[a] > a))
    total += float(d[triple[0], triple[1]] + d[triple[0], triple[2]] + d[triple[1], triple[2]])
    return PairsOfPairs(mate, triple, total)


def pair_pairs(pair_means, greedy: Optional[bool] = None) -> PairsOfPairs:
    """Mahalanobis pairs of pairs for any ``n >= 2`` (odd ``n >= 3``)."""
    dm = mahalanobis_matrix(pair_means)
    if dm.n % 2:
        return pair_odd(dm, greedy=greedy)
    return min_weight_pairing(dm, greedy=greedy)
