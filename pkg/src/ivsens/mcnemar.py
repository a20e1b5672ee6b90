"""McNemar's statistic and its worst-case binomial sensitivity bound.

For binary outcomes and ``lambda0 = 0`` only discordant pairs carry
information, and the studentized test bound coincides with the bound
``P(Binomial(|D|, theta) >= T_D)``.  :func:`check_equivalence` verifies this
on a given dataset by exact enumeration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .adjusted import adjusted_diffs, shift_factor
from .core import DataError, PairedDataset
from .reference import EXACT_MAX_N, exact_distribution, observed_statistic, reference_exact
from .variance import build_q_intercept


@dataclass(frozen=True)
class McNemarDecomp:
    t_m: int
    n_discordant: int
    n_both: int
    t_d: int

    def __post_init__(self):
        if self.t_m != self.t_d + self.n_both or not 0 <= self.t_d <= self.n_discordant:
            raise ValueError(f"inconsistent McNemar counts {self}")


@dataclass(frozen=True)
class EquivalenceReport:
    gamma: float
    alpha: float
    p_mcnemar: float
    p_studentized: float
    reject_mcnemar: bool
    reject_studentized: bool
    rank_corr: float

    @property
    def abs_diff(self) -> float:
        return abs(self.p_mcnemar - self.p_studentized)

    @property
    def equal(self) -> bool:
        return self.abs_diff <= 1e-10 and self.reject_mcnemar == self.reject_studentized


def mcnemar_decompose(data: PairedDataset) -> McNemarDecomp:
    y = data.y
    if not np.isin(y, (0.0, 1.0)).all():
        raise DataError("McNemar decomposition needs binary outcomes")
    enc = np.where(data.z[:, 0] == 1, y[:, 0], y[:, 1])
    total = y.sum(axis=1)
    disc = total == 1
    return McNemarDecomp(
        t_m=int(enc.sum()),
        n_discordant=int(disc.sum()),
        n_both=int(np.sum(total == 2)),
        t_d=int(enc[disc].sum()),
    )


def mcnemar_sens_p(decomp: McNemarDecomp, gamma: float) -> float:
    """Upper bound ``P(Binomial(|D|, gamma / (1 + gamma)) >= T_D)``."""
    if gamma < 1:
        raise ValueError(f"gamma must be >= 1, got {gamma}")
    if decomp.t_d <= 0:
        return 1.0
    theta = gamma / (1.0 + gamma)
    # scipy's survival function stays accurate far into the tail
    return float(stats.binom.sf(decomp.t_d - 1, decomp.n_discordant, theta))


def _rank_corr_with_td(abs_zeta, gamma, q) -> float:
    a, _ = exact_distribution(abs_zeta, gamma, q)
    nz = np.flatnonzero(abs_zeta != 0)
    if nz.size == 0:
        return 1.0
    codes = np.arange(2 ** nz.size)[:, None]
    t_d = ((codes >> np.arange(nz.size)) & 1).sum(axis=1)
    if np.unique(t_d).size < 2:
        return 1.0
    # round away last-bit noise so that ties in T_D stay ties in the statistic
    fin = np.isfinite(a)
    a = a.copy()
    a[fin] = np.round(a[fin], 9)
    return float(stats.spearmanr(a, t_d).statistic)


def check_equivalence(data: PairedDataset, gamma: float, alpha: float = 0.05) -> EquivalenceReport:
    """Compare the binomial bound with the exact studentized bound at ``lambda0 = 0``."""
    if data.n > EXACT_MAX_N:
        raise ValueError(f"exact comparison limited to n <= {EXACT_MAX_N}")
    decomp = mcnemar_decompose(data)
    p_m = mcnemar_sens_p(decomp, gamma)
    q = build_q_intercept(data.n)
    zeta = adjusted_diffs(data, 0.0).zeta
    t_obs = observed_statistic(zeta, gamma, q)
    p_s = reference_exact(np.abs(zeta), gamma, q, t_obs)
    rho = _rank_corr_with_td(np.abs(zeta), gamma, q)
    return EquivalenceReport(float(gamma), float(alpha), p_m, p_s, p_m <= alpha, p_s <= alpha, rho)
