"""Worst-case reference distribution, p-value bounds and test inversion.

At bias level ``gamma`` the observed statistic ``mean(L) / se(L; Q)`` is
compared with the distribution of ``mean(B) / se(B; Q)`` where
``B_i = (V_i - kappa) |zeta_i|``, ``kappa = (gamma - 1) / (gamma + 1)``
and ``V_i = +1`` with probability ``gamma / (1 + gamma)``, else ``-1``.

Monte Carlo signs come from a fixed matrix of Philox uniforms, so the
same seed couples draws across ``gamma`` (a sign is ``+1`` when its
uniform falls below ``theta``) and across ``lambda0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .adjusted import SE_ZERO_RTOL, adjusted_diffs, shift_factor, studentize
from .core import PairedDataset, SensitivityParams, effect_ratio_estimate
from ._kernels import draws_basis, draws_groups
from .variance import LEVERAGE_TOL, QDesign, build_q_intercept, se_q

# Relative slack when counting draws at least as large as the observed value.
TIE_RTOL = 1e-9
EXACT_MAX_N = 20

ENGINE_NAMES = {"intercept": "conventional", "regression": "regression",
                "pairs_of_pairs": "pairs_of_pairs"}
SIDES = ("greater", "less", "two_sided")


@dataclass(frozen=True)
class SensResult:
    gamma: float
    lambda0: float
    t_obs: float
    p_bound: float
    critical: float
    reject: bool
    m_reps: int
    seed: int
    engine: str
    side: str = "greater"
    alpha: float = 0.05


@dataclass(frozen=True)
class SensInterval:
    gamma: float
    alpha: float
    lo: float
    hi: float
    grid: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SensitivityValue:
    value: float
    capped: bool
    evaluations: int

    def __float__(self):
        return float(self.value)


def _studentize_rows(b: np.ndarray, q: QDesign) -> np.ndarray:
    b_bar = b.mean(axis=-1)
    se = se_q(b, q)
    scale = np.max(np.abs(b), axis=-1)
    zero = se <= SE_ZERO_RTOL * np.maximum(scale, np.finfo(float).tiny)
    with np.errstate(divide="ignore", invalid="ignore"):
        a = b_bar / se
    a = np.where(zero, np.where(b_bar > SE_ZERO_RTOL * scale, np.inf, -np.inf), a)
    return a


def statistics_from_signs(v: np.ndarray, abs_zeta: np.ndarray, gamma: float, q: QDesign,
                          truncate: bool = False) -> np.ndarray:
    """Studentized bounding statistic for each row of signs ``v``."""
    b = (v - shift_factor(gamma)) * abs_zeta
    a = _studentize_rows(b, q)
    return np.maximum(a, 0.0) if truncate else a


def observed_statistic(zeta: np.ndarray, gamma: float, q: QDesign,
                       truncate: bool = False) -> float:
    l = zeta - shift_factor(gamma) * np.abs(zeta)
    t, _ = studentize(float(l.mean()), float(se_q(l, q)), float(np.max(np.abs(l))))
    return max(t, 0.0) if truncate else t


def _count_at_least(a: np.ndarray, t: float) -> int:
    if np.isfinite(t):
        t = t - TIE_RTOL * max(1.0, abs(t))
    return int(np.count_nonzero(a >= t))


def _group_arrays(q: QDesign):
    labels, grp = np.unique(q.groups, return_inverse=True)
    gsize = np.bincount(grp).astype(float)
    return grp.astype(np.int64), gsize


class ReferenceSampler:
    """Common random numbers for ``m_reps`` reference draws over ``n`` pairs.

    Row ``m`` of the uniform matrix is the ``m``-th block of the Philox
    stream keyed by ``seed``, so a replicate never depends on how the
    others are scheduled.
    """

    def __init__(self, n: int, m_reps: int = 10_000, seed: int = 0):
        self.n = int(n)
        self.m_reps = int(m_reps)
        self.seed = int(seed)
        gen = np.random.Generator(np.random.Philox(key=self.seed))
        self.uniforms = gen.random((self.m_reps, self.n))

    def signs(self, gamma: float) -> np.ndarray:
        theta = 1.0 if np.isinf(gamma) else gamma / (1.0 + gamma)
        return np.where(self.uniforms < theta, 1.0, -1.0)

    def draws(self, abs_zeta, gamma: float, q: Optional[QDesign] = None,
              truncate: bool = False) -> np.ndarray:
        abs_zeta = np.ascontiguousarray(abs_zeta, dtype=float)
        q = build_q_intercept(self.n) if q is None else q
        if abs_zeta.shape[0] != self.n or q.n != self.n:
            raise ValueError("sampler, design and data disagree on the number of pairs")
        if np.any(q.hat_diag >= 1.0 - LEVERAGE_TOL):
            raise ValueError("a row has leverage 1; its residual is identically zero")
        theta = 1.0 if np.isinf(gamma) else gamma / (1.0 + gamma)
        kappa = shift_factor(gamma)
        scale = np.ascontiguousarray(q.scale, dtype=float)
        if q.groups is not None:
            grp, gsize = _group_arrays(q)
            return draws_groups(self.uniforms, theta, kappa, abs_zeta, scale, grp, gsize,
                                SE_ZERO_RTOL, truncate)
        return draws_basis(self.uniforms, theta, kappa, abs_zeta, scale,
                           np.ascontiguousarray(q.basis.T), SE_ZERO_RTOL, truncate)


def reference_draw(abs_zeta, gamma: float, q: Optional[QDesign], rng: np.random.Generator,
                   truncate: bool = False, max_retries: int = 0) -> float:
    """One draw ``A = mean(B) / se(B; Q)``.

    A draw with zero spread is ``+inf`` if its mean is positive and
    ``-inf`` otherwise.  By default it is not redrawn, which keeps the
    sampled law equal to the one :func:`reference_exact` enumerates;
    ``max_retries > 0`` redraws degenerate signs up to that many times.
    """
    abs_zeta = np.asarray(abs_zeta, float)
    n = abs_zeta.shape[0]
    q = build_q_intercept(n) if q is None else q
    theta = gamma / (1.0 + gamma)
    for _ in range(max_retries + 1):
        v = np.where(rng.random(n) < theta, 1.0, -1.0)
        a = float(statistics_from_signs(v[None, :], abs_zeta, gamma, q, truncate)[0])
        if np.isfinite(a):
            break
    return a


def _all_signs(m: int) -> np.ndarray:
    codes = np.arange(2 ** m, dtype=np.int64)[:, None]
    bits = (codes >> np.arange(m, dtype=np.int64)) & 1
    return np.where(bits == 1, 1.0, -1.0)


def exact_distribution(abs_zeta, gamma: float, q: Optional[QDesign] = None,
                       truncate: bool = False):
    """All values of the bounding statistic with their probabilities.

    Pairs with ``|zeta| = 0`` contribute ``B_i = 0`` whatever their sign, so
    only the nonzero ones are enumerated.
    """
    abs_zeta = np.asarray(abs_zeta, float)
    n = abs_zeta.shape[0]
    if n > EXACT_MAX_N:
        raise ValueError(f"exact enumeration refused for n={n} > {EXACT_MAX_N}")
    q = build_q_intercept(n) if q is None else q
    nz = np.flatnonzero(abs_zeta != 0)
    theta = gamma / (1.0 + gamma)
    if nz.size == 0:
        v = np.ones((1, n))
        return statistics_from_signs(v, abs_zeta, gamma, q, truncate), np.ones(1)
    signs = _all_signs(nz.size)
    v = np.ones((signs.shape[0], n))
    v[:, nz] = signs
    n_pos = np.sum(signs > 0, axis=1)
    prob = theta ** n_pos * (1.0 - theta) ** (nz.size - n_pos)
    return statistics_from_signs(v, abs_zeta, gamma, q, truncate), prob


def reference_exact(abs_zeta, gamma: float, q: Optional[QDesign], t_obs: float,
                    truncate: bool = False) -> float:
    """Exact upper-tail probability ``P(A >= t_obs)`` by enumeration (``n <= 20``)."""
    a, prob = exact_distribution(abs_zeta, gamma, q, truncate)
    if np.isfinite(t_obs):
        t_obs = t_obs - TIE_RTOL * max(1.0, abs(t_obs))
    return float(np.sum(prob[a >= t_obs]))


def _p_bound(a: np.ndarray, t: float) -> float:
    return (1.0 + _count_at_least(a, t)) / (1.0 + a.shape[0])


def _critical_value(a: np.ndarray, level: float) -> float:
    """Smallest draw ``c`` with ``(1 + #{A >= c}) / (1 + M) <= level``.

    Rejecting when ``t_obs >= c`` is then the same decision as
    ``p_bound <= level`` (up to ties among draws).
    """
    m = a.shape[0]
    k = int(np.floor(level * (1 + m) + 1e-9)) - 1
    if k < 1:
        return np.inf
    return float(-np.partition(-a, k - 1)[k - 1])


def _engine(q: QDesign) -> str:
    return ENGINE_NAMES[q.kind]


def sens_test_zeta(zeta, lambda0: float, gamma: float, alpha: float, q: QDesign,
                   sampler: ReferenceSampler, side: str = "greater",
                   truncate: bool = False) -> SensResult:
    """The test of :func:`sens_test` applied to a ready vector of adjusted differences."""
    return _test_zeta(np.asarray(zeta, float), lambda0, gamma, alpha, q, sampler, side, truncate)


def _test_zeta(zeta, lambda0, gamma, alpha, q, sampler, side, truncate) -> SensResult:
    abs_zeta = np.abs(zeta)
    a = sampler.draws(abs_zeta, gamma, q, truncate)
    if side == "greater":
        t = observed_statistic(zeta, gamma, q, truncate)
        p = _p_bound(a, t)
        level = alpha
    elif side == "less":
        t = observed_statistic(-zeta, gamma, q, truncate)
        p = _p_bound(a, t)
        level = alpha
    elif side == "two_sided":
        t_g = observed_statistic(zeta, gamma, q, truncate)
        t_l = observed_statistic(-zeta, gamma, q, truncate)
        p_g, p_l = _p_bound(a, t_g), _p_bound(a, t_l)
        t = t_g if p_g <= p_l else t_l
        p = min(1.0, 2.0 * min(p_g, p_l))
        level = alpha / 2.0
    else:
        raise ValueError(f"side must be one of {SIDES}, got {side!r}")
    critical = _critical_value(a, level)
    return SensResult(float(gamma), float(lambda0), float(t), float(p), critical,
                      bool(p <= alpha), sampler.m_reps, sampler.seed, _engine(q), side, float(alpha))


def _prepare(data: PairedDataset, params: SensitivityParams, q, sampler):
    q = build_q_intercept(data.n) if q is None else q
    if q.n != data.n:
        raise ValueError("design and dataset disagree on the number of pairs")
    if sampler is None:
        sampler = ReferenceSampler(data.n, params.m_reps, params.seed)
    return q, sampler


def sens_test(data: PairedDataset, lambda0: float, params: SensitivityParams,
              q: Optional[QDesign] = None, side: str = "greater", truncate: bool = False,
              sampler: Optional[ReferenceSampler] = None) -> SensResult:
    """Monte Carlo sensitivity test of ``effect ratio == lambda0`` at ``params.gamma``.

    The less-than test is the greater-than test applied to ``-zeta``; the
    two-sided p-value doubles the smaller one-sided bound.
    """
    q, sampler = _prepare(data, params, q, sampler)
    zeta = adjusted_diffs(data, lambda0).zeta
    return _test_zeta(zeta, lambda0, params.gamma, params.alpha, q, sampler, side, truncate)


def _lambda_scale(data: PairedDataset, lam_hat: float) -> float:
    zeta = adjusted_diffs(data, lam_hat).zeta
    n = data.n
    se = np.sqrt(np.sum((zeta - zeta.mean()) ** 2) / (n * (n - 1)))
    scale = se / abs(float(np.mean(data.dd)))
    if not np.isfinite(scale) or scale <= 0:
        scale = max(1e-8, abs(lam_hat) * 1e-3)
    return float(scale)


def sens_interval(data: PairedDataset, gamma: float, alpha: float,
                  params: Optional[SensitivityParams] = None, q: Optional[QDesign] = None,
                  sampler: Optional[ReferenceSampler] = None, truncate: bool = False,
                  max_doublings: int = 60) -> SensInterval:
    """Invert the two-sided test at level ``alpha`` into an interval for the effect ratio.

    From the point estimate the search steps outward by a tenth of the
    standard error of the estimate, doubling each step until the test
    rejects, then bisects each boundary to ``1e-4`` standard errors.
    An end that never rejects is reported as infinite.
    """
    params = params or SensitivityParams(gamma=gamma, alpha=alpha)
    q, sampler = _prepare(data, params, q, sampler)
    lam_hat = effect_ratio_estimate(data)
    scale = _lambda_scale(data, lam_hat)
    step = scale / 10.0
    tol = 1e-4 * scale
    n_eval = [0]

    def rejects(lam):
        n_eval[0] += 1
        zeta = data.dy - lam * data.dd
        return _test_zeta(zeta, lam, gamma, alpha, q, sampler, "two_sided", truncate).reject

    if rejects(lam_hat):
        raise ValueError(
            f"empty interval: the point estimate {lam_hat:.6g} is itself rejected at "
            f"gamma={gamma}, alpha={alpha}")

    ends = []
    for direction in (-1.0, 1.0):
        inside, outside = lam_hat, None
        h = step
        for _ in range(max_doublings):
            cand = lam_hat + direction * h
            if rejects(cand):
                outside = cand
                break
            inside = cand
            h *= 2.0
        if outside is None:
            ends.append(direction * np.inf)
            continue
        while abs(outside - inside) > tol:
            mid = 0.5 * (inside + outside)
            if rejects(mid):
                outside = mid
            else:
                inside = mid
        ends.append(inside)
    grid = {"center": lam_hat, "initial_step": step, "tolerance": tol,
            "evaluations": n_eval[0], "engine": _engine(q), "m_reps": sampler.m_reps,
            "seed": sampler.seed}
    return SensInterval(float(gamma), float(alpha), float(ends[0]), float(ends[1]), grid)


def sensitivity_value(data: PairedDataset, lambda0: float, alpha: float,
                      params: Optional[SensitivityParams] = None, q: Optional[QDesign] = None,
                      side: str = "greater", gamma_max: float = 20.0, tol: float = 0.005,
                      sampler: Optional[ReferenceSampler] = None,
                      truncate: bool = False) -> SensitivityValue:
    """Largest ``gamma`` at which the null ``lambda0`` is still rejected.

    Bisection relies on the rejection decision being monotone in ``gamma``,
    which the shared uniforms make hold draw by draw for the reference side.
    """
    params = params or SensitivityParams(alpha=alpha)
    q, sampler = _prepare(data, params, q, sampler)
    zeta = adjusted_diffs(data, lambda0).zeta
    evals = [0]

    def rejects(g):
        evals[0] += 1
        return _test_zeta(zeta, lambda0, g, alpha, q, sampler, side, truncate).reject

    if not rejects(1.0):
        return SensitivityValue(1.0, False, evals[0])
    if rejects(gamma_max):
        return SensitivityValue(float(gamma_max), True, evals[0])
    lo, hi = 1.0, float(gamma_max)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if rejects(mid):
            lo = mid
        else:
            hi = mid
    return SensitivityValue(lo, False, evals[0])
