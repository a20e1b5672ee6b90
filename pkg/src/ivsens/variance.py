"""Leverage-corrected standard errors from a fixed design matrix.

For an ``n x p`` design ``Q`` with hat matrix ``H`` and leverages ``h_ii``
the variance estimate of a mean of ``l`` is::

    se^2 = (1 / n^2) * lt' (I - H) lt,      lt_i = l_i / sqrt(1 - h_ii)

With the intercept-only design this equals the usual paired
``sum((l - mean)^2) / (n (n - 1))``.  Every function here accepts either a
single vector ``l`` of length ``n`` or a stack of shape ``(m, n)`` and
then returns ``m`` values, which is how reference draws are evaluated.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from .core import PairedDataset

RANK_TOL = 1e-10
LEVERAGE_TOL = 1e-10

KINDS = ("intercept", "regression", "pairs_of_pairs")


@dataclass(frozen=True, eq=False)
class QDesign:
    """A design fixed across randomizations.

    ``basis`` is an orthonormal basis of the column space of ``q``.  When
    ``groups`` is set the design is a set of group indicators and the
    projection reduces to group means.
    """

    kind: str
    q: np.ndarray
    hat_diag: np.ndarray
    basis: np.ndarray
    groups: Optional[np.ndarray] = None
    dropped: tuple = ()
    scale: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown design kind {self.kind!r}")
        with np.errstate(divide="ignore"):
            object.__setattr__(self, "scale", 1.0 / np.sqrt(1.0 - self.hat_diag))
        if self.groups is not None:
            order = np.argsort(self.groups, kind="stable")
            _, starts, sizes = np.unique(self.groups[order], return_index=True, return_counts=True)
            object.__setattr__(self, "_order", order)
            object.__setattr__(self, "_starts", starts)
            object.__setattr__(self, "_sizes", sizes.astype(float))

    @property
    def n(self) -> int:
        return self.q.shape[0]

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    def projected_sq(self, v: np.ndarray) -> np.ndarray:
        """``||H v||^2`` along the last axis."""
        if self.groups is not None:
            sums = np.add.reduceat(v[..., self._order], self._starts, axis=-1)
            return np.sum(sums ** 2 / self._sizes, axis=-1)
        return np.sum((v @ self.basis) ** 2, axis=-1)

    def residuals(self, v: np.ndarray) -> np.ndarray:
        """``(I - H) v`` along the last axis."""
        if self.groups is not None:
            sums = np.add.reduceat(v[..., self._order], self._starts, axis=-1)
            means = (sums / self._sizes)
            means = np.repeat(means, self._sizes.astype(int), axis=-1)
            out = np.empty_like(v, dtype=float)
            out[..., self._order] = v[..., self._order] - means
            return out
        return v - (v @ self.basis) @ self.basis.T


def _orthonormal_basis(q: np.ndarray):
    """Pivoted QR with collinear columns dropped."""
    if q.shape[1] == 0:
        raise ValueError("design has no columns")
    qr, r, piv = scipy.linalg.qr(q, mode="economic", pivoting=True)
    tol = RANK_TOL * max(np.linalg.norm(q), np.finfo(float).tiny)
    keep = np.abs(np.diag(r)) > tol
    rank = int(np.sum(keep))
    dropped = tuple(sorted(int(c) for c in piv[rank:]))
    return qr[:, :rank], dropped


def design_from_matrix(q: np.ndarray, kind: str = "regression", groups=None) -> QDesign:
    q = np.asarray(q, float)
    if q.ndim == 1:
        q = q[:, None]
    basis, dropped = _orthonormal_basis(q)
    if basis.shape[1] >= q.shape[0]:
        raise ValueError("design wider than sample: need rank(Q) < n")
    hat = np.sum(basis ** 2, axis=1)
    return QDesign(kind, q, hat, basis, None if groups is None else np.asarray(groups), dropped)


def build_q_intercept(n: int) -> QDesign:
    if n < 2:
        raise ValueError("need n >= 2")
    q = np.ones((n, 1))
    return QDesign("intercept", q, np.full(n, 1.0 / n), q / np.sqrt(n), np.zeros(n, dtype=int))


def build_q_regression(data) -> QDesign:
    """Intercept plus pair-mean covariates.

    ``data`` is a :class:`PairedDataset` or an ``(n, k)`` array of
    pair means.
    """
    xbar = data.pair_means if isinstance(data, PairedDataset) else np.asarray(data, float)
    if xbar.ndim == 1:
        xbar = xbar[:, None]
    n, k = xbar.shape
    if k == 0:
        return build_q_intercept(n)
    if n <= k + 1:
        raise ValueError(f"design wider than sample: n={n} <= k+1={k + 1}")
    return design_from_matrix(np.column_stack([np.ones(n), xbar]), "regression")


def build_q_groups(groups) -> QDesign:
    """Indicator design for a partition of the pairs (pairs of pairs)."""
    groups = np.asarray(groups)
    labels, inv = np.unique(groups, return_inverse=True)
    n = groups.shape[0]
    q = np.zeros((n, labels.size))
    q[np.arange(n), inv] = 1.0
    sizes = q.sum(axis=0)
    if labels.size >= n:
        raise ValueError("design wider than sample: every group is a singleton")
    basis = q / np.sqrt(sizes)
    hat = 1.0 / sizes[inv]
    return QDesign("pairs_of_pairs", q, hat, basis, inv)


def se_q(l: np.ndarray, q: QDesign, rmse: bool = False) -> np.ndarray:
    """Standard error of the mean of ``l`` under design ``q``.

    With ``rmse=True`` the unscaled variant ``||(I - H) l||^2 / (n (n - p))``
    is returned instead (regression RMSE divided by ``sqrt(n)``).
    """
    l = np.asarray(l, float)
    n = l.shape[-1]
    if n != q.n:
        raise ValueError(f"length mismatch: {n} values for a {q.n}-row design")
    if rmse:
        if q.rank >= n:
            raise ValueError("no residual degrees of freedom")
        rss = np.sum(q.residuals(l) ** 2, axis=-1)
        return np.sqrt(rss / (n * (n - q.rank)))
    if np.any(q.hat_diag >= 1.0 - LEVERAGE_TOL):
        raise ValueError("a row has leverage 1; its residual is identically zero")
    # residuals are formed explicitly: ||v||^2 - ||Hv||^2 cancels badly near zero
    rss = np.sum(q.residuals(l * q.scale) ** 2, axis=-1)
    return np.sqrt(rss) / n


def se_pop(l: np.ndarray, pop) -> float:
    """Pairs-of-pairs standard error from squared within-couple differences.

    Members of a triple (odd ``n``) are handled through the indicator
    design, which is what the squared-difference formula generalizes to.
    """
    l = np.asarray(l, float)
    partner = np.asarray(pop.partner)
    n = l.shape[-1]
    if partner.shape[0] != n:
        raise ValueError("pairing does not cover every pair")
    if pop.triple is not None:
        return se_q(l, build_q_groups(pop.groups()))
    idx = np.arange(n)
    if np.any(partner < 0) or np.any(partner[partner] != idx) or np.any(partner == idx):
        raise ValueError("malformed pairing: partner map is not an involution without fixed points")
    return np.sqrt(np.sum((l - l[..., partner]) ** 2, axis=-1) / (2.0 * n * n))
