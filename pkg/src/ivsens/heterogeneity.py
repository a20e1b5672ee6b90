"""Omnibus randomization test of the proportional-dose model.

Under the proportional-dose model at ``lambda0`` the adjusted differences
have fixed magnitudes and only their signs are random.  The test
regresses ``zeta`` on a covariate design and refers the F statistic to its
sign-flip distribution.  Because ``lambda0`` is unknown, the p-value is
maximized over a ``1 - beta`` confidence interval and ``beta`` is added.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import PairedDataset, SensitivityParams
from .reference import EXACT_MAX_N, TIE_RTOL, _all_signs, sens_interval
from .variance import QDesign, build_q_groups, build_q_regression

F_ENGINES = ("regression", "pairs_of_pairs")


@dataclass(frozen=True)
class OmnibusResult:
    beta: float
    alpha: float
    ci_lambda: tuple
    sup_p: float
    p_beta: float
    reject: bool
    grid_size: int
    f_engine: str
    lambda_at_sup: float
    flag: Optional[str] = None
    m_reps: int = 0
    seed: int = 0


def f_statistic(zeta, q: QDesign) -> np.ndarray:
    """F statistic of the fit on ``q`` against the intercept-only fit.

    Works row-wise on a stack of vectors.  A perfect fit gives ``+inf``;
    a constant ``zeta`` (nothing to explain) gives ``0``.
    """
    zeta = np.asarray(zeta, float)
    n = zeta.shape[-1]
    p = q.rank
    if p < 2:
        raise ValueError("F statistic needs a design with more than one column")
    if n <= p:
        raise ValueError(f"F statistic needs n > p, got n={n}, p={p}")
    sse0 = np.sum((zeta - zeta.mean(axis=-1, keepdims=True)) ** 2, axis=-1)
    sse1 = np.sum(q.residuals(zeta) ** 2, axis=-1)
    sse1 = np.minimum(sse1, sse0)
    small = np.finfo(float).eps * 64
    with np.errstate(divide="ignore", invalid="ignore"):
        f = ((sse0 - sse1) / (p - 1)) / (sse1 / (n - p))
    f = np.where(sse1 <= small * sse0, np.inf, f)
    f = np.where(sse0 <= np.finfo(float).tiny, 0.0, f)
    return f if f.ndim else float(f)


def _count_at_least(f: np.ndarray, f_obs: float) -> int:
    if np.isfinite(f_obs):
        f_obs = f_obs - TIE_RTOL * max(1.0, abs(f_obs))
    return int(np.count_nonzero(f >= f_obs))


def sign_flips(n: int, m_reps: int, seed: int) -> np.ndarray:
    gen = np.random.Generator(np.random.Philox(key=int(seed)))
    return np.where(gen.random((int(m_reps), n)) < 0.5, 1.0, -1.0)


def _p_from_signs(zeta: np.ndarray, q: QDesign, signs: np.ndarray) -> float:
    f_obs = f_statistic(zeta, q)
    f = f_statistic(signs * np.abs(zeta), q)
    return (1.0 + _count_at_least(f, f_obs)) / (1.0 + signs.shape[0])


def prop_dose_p(data: PairedDataset, lambda0: float, q: QDesign, m_reps: int = 10_000,
                seed: int = 0, signs: Optional[np.ndarray] = None) -> float:
    """Monte Carlo sign-flip p-value of the proportional-dose model at ``lambda0``."""
    zeta = data.dy - lambda0 * data.dd
    if signs is None:
        signs = sign_flips(data.n, m_reps, seed)
    return _p_from_signs(zeta, q, signs)


def prop_dose_p_exact(data: PairedDataset, lambda0: float, q: QDesign) -> float:
    """The same p-value by enumerating all ``2^n`` sign vectors (``n <= 20``)."""
    n = data.n
    if n > EXACT_MAX_N:
        raise ValueError(f"exact enumeration refused for n={n} > {EXACT_MAX_N}")
    zeta = data.dy - lambda0 * data.dd
    f_obs = f_statistic(zeta, q)
    f = f_statistic(_all_signs(n) * np.abs(zeta), q)
    return _count_at_least(f, f_obs) / float(2 ** n)


def default_f_design(data: PairedDataset, engine: str = "regression") -> QDesign:
    if engine == "regression":
        return build_q_regression(data)
    if engine == "pairs_of_pairs":
        from .nonbipartite import pair_pairs
        return build_q_groups(pair_pairs(data.pair_means).groups())
    raise ValueError(f"f_engine must be one of {F_ENGINES}, got {engine!r}")


def omnibus_test(data: PairedDataset, beta: float = 0.01, alpha: float = 0.05,
                 q: Optional[QDesign] = None, grid_size: int = 101, m_reps: int = 10_000,
                 seed: int = 0, q_ci: Optional[QDesign] = None,
                 ci_reps: Optional[int] = None) -> OmnibusResult:
    """Berger-Boos omnibus test of the proportional-dose model.

    ``q`` is the F design (default: intercept plus pair-mean covariates).
    ``q_ci`` is the design whose Gamma = 1 test is inverted for the
    ``1 - beta`` interval (default: pairs of pairs).  All grid points share
    one matrix of sign flips.
    """
    if not 0 < beta < alpha:
        raise ValueError(f"need 0 < beta < alpha, got beta={beta}, alpha={alpha}")
    q = default_f_design(data) if q is None else q
    if q_ci is None:
        q_ci = default_f_design(data, "pairs_of_pairs") if data.k else None
    ci_params = SensitivityParams(gamma=1.0, alpha=min(beta, 0.5),
                                  m_reps=ci_reps or m_reps, seed=seed)
    common = dict(beta=float(beta), alpha=float(alpha), f_engine=q.kind,
                  m_reps=int(m_reps), seed=int(seed))
    try:
        ci = sens_interval(data, 1.0, beta, ci_params, q=q_ci)
    except ValueError:
        return OmnibusResult(ci_lambda=(np.nan, np.nan), sup_p=0.0, p_beta=float(beta),
                             reject=beta <= alpha, grid_size=0, lambda_at_sup=np.nan,
                             flag="empty confidence interval", **common)
    if not (np.isfinite(ci.lo) and np.isfinite(ci.hi)):
        return OmnibusResult(ci_lambda=(ci.lo, ci.hi), sup_p=1.0, p_beta=1.0, reject=False,
                             grid_size=0, lambda_at_sup=np.nan,
                             flag="unbounded confidence interval", **common)
    grid = np.linspace(ci.lo, ci.hi, grid_size)
    signs = sign_flips(data.n, m_reps, seed + 1)
    pvals = np.array([_p_from_signs(data.dy - lam * data.dd, q, signs) for lam in grid])
    j = int(np.argmax(pvals))
    sup_p = float(pvals[j])
    p_beta = min(1.0, sup_p + beta)
    return OmnibusResult(ci_lambda=(ci.lo, ci.hi), sup_p=sup_p, p_beta=p_beta,
                         reject=bool(p_beta <= alpha), grid_size=grid_size,
                         lambda_at_sup=float(grid[j]), **common)
