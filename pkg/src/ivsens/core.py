"""Paired encouragement data and the effect-ratio point estimate.

A dataset holds ``n`` matched pairs.  Each pair has exactly one encouraged
unit (``z == 1``).  Arrays are stored in the order the user supplied them;
the encouraged-minus-unencouraged differences that every downstream
statistic consumes are exposed through :attr:`PairedDataset.dy` and
:attr:`PairedDataset.dd`, which is the canonical ordering in disguise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


class DataError(ValueError):
    """Raised when paired data violate a structural invariant."""


class DegenerateInstrumentError(ValueError):
    """Raised when encouragement has no net effect on exposure."""


@dataclass(frozen=True)
class MatchedPair:
    pair_id: object
    z: tuple
    d: tuple
    y: tuple
    x: tuple = ((), ())
    subgroup: Optional[str] = None


@dataclass(frozen=True, eq=False)
class PairedDataset:
    """Column-oriented storage for ``n`` matched pairs.

    ``z``, ``d`` and ``y`` have shape ``(n, 2)``; ``x`` has shape
    ``(n, 2, k)`` with ``k >= 0``.
    """

    pair_ids: np.ndarray
    z: np.ndarray
    d: np.ndarray
    y: np.ndarray
    x: np.ndarray
    covariate_names: tuple = ()
    subgroup: Optional[np.ndarray] = None
    allow_continuous_dose: bool = field(default=False, compare=False)

    @classmethod
    def from_pairs(cls, pairs: Sequence[MatchedPair], covariate_names=None,
                   allow_continuous_dose=False) -> "PairedDataset":
        if not pairs:
            raise DataError("dataset has no pairs")
        k_set = {len(np.atleast_1d(p.x[0])) if len(p.x[0]) else 0 for p in pairs}
        k_set |= {len(np.atleast_1d(p.x[1])) if len(p.x[1]) else 0 for p in pairs}
        if len(k_set) != 1:
            raise DataError("ragged covariates: covariate vectors differ in length")
        k = k_set.pop()
        x = np.zeros((len(pairs), 2, k))
        if k:
            x[:] = [[np.asarray(p.x[0], float), np.asarray(p.x[1], float)] for p in pairs]
        sub = None
        if any(p.subgroup is not None for p in pairs):
            sub = np.array([p.subgroup for p in pairs], dtype=object)
        names = tuple(covariate_names) if covariate_names is not None else tuple(
            f"x_{j + 1}" for j in range(k))
        return cls(
            pair_ids=np.array([p.pair_id for p in pairs], dtype=object),
            z=np.array([p.z for p in pairs], dtype=float),
            d=np.array([p.d for p in pairs], dtype=float),
            y=np.array([p.y for p in pairs], dtype=float),
            x=x,
            covariate_names=names,
            subgroup=sub,
            allow_continuous_dose=allow_continuous_dose,
        )

    @classmethod
    def from_differences(cls, y_enc, y_ctl, d_enc, d_ctl, x_pair=None,
                         pair_ids=None) -> "PairedDataset":
        """Build a dataset whose first unit is always the encouraged one.

        ``x_pair`` (shape ``(n, k)``) is copied to both units of a pair.
        """
        y_enc = np.asarray(y_enc, float)
        n = y_enc.shape[0]
        y = np.column_stack([y_enc, np.asarray(y_ctl, float)])
        d = np.column_stack([np.asarray(d_enc, float), np.asarray(d_ctl, float)])
        z = np.tile([1.0, 0.0], (n, 1))
        if x_pair is None:
            x = np.zeros((n, 2, 0))
        else:
            xp = np.asarray(x_pair, float).reshape(n, -1)
            x = np.repeat(xp[:, None, :], 2, axis=1)
        ids = np.arange(n).astype(object) if pair_ids is None else np.asarray(pair_ids, dtype=object)
        return cls(ids, z, d, y, x, tuple(f"x_{j + 1}" for j in range(x.shape[2])))

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def k(self) -> int:
        return self.x.shape[2]

    @property
    def sign(self) -> np.ndarray:
        """``Z_i1 - Z_i2`` for every pair (``+1`` or ``-1``)."""
        return self.z[:, 0] - self.z[:, 1]

    @property
    def dy(self) -> np.ndarray:
        """Encouraged-minus-unencouraged outcome differences."""
        return self.sign * (self.y[:, 0] - self.y[:, 1])

    @property
    def dd(self) -> np.ndarray:
        """Encouraged-minus-unencouraged exposure differences."""
        return self.sign * (self.d[:, 0] - self.d[:, 1])

    @property
    def pair_means(self) -> np.ndarray:
        """Within-pair covariate averages, shape ``(n, k)``."""
        return self.x.mean(axis=1)

    @property
    def pairs(self) -> list:
        out = []
        for i in range(self.n):
            out.append(MatchedPair(
                pair_id=self.pair_ids[i],
                z=tuple(self.z[i]), d=tuple(self.d[i]), y=tuple(self.y[i]),
                x=(tuple(self.x[i, 0]), tuple(self.x[i, 1])),
                subgroup=None if self.subgroup is None else self.subgroup[i],
            ))
        return out

    def canonical(self) -> "PairedDataset":
        """Reorder units so the encouraged one comes first in every pair."""
        flip = self.z[:, 0] < self.z[:, 1]
        idx = np.where(flip[:, None], [1, 0], [0, 1])
        take = lambda a: np.take_along_axis(a, idx, axis=1)
        x = np.take_along_axis(self.x, idx[:, :, None], axis=1) if self.k else self.x
        return PairedDataset(self.pair_ids, take(self.z), take(self.d), take(self.y), x,
                             self.covariate_names, self.subgroup, self.allow_continuous_dose)

    def subset(self, mask) -> "PairedDataset":
        mask = np.asarray(mask)
        sub = None if self.subgroup is None else self.subgroup[mask]
        return PairedDataset(self.pair_ids[mask], self.z[mask], self.d[mask], self.y[mask],
                             self.x[mask], self.covariate_names, sub, self.allow_continuous_dose)


@dataclass(frozen=True)
class SensitivityParams:
    gamma: float = 1.0
    alpha: float = 0.05
    m_reps: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if not np.isfinite(self.gamma) or self.gamma < 1:
            raise ValueError(f"gamma must be >= 1, got {self.gamma}")
        if not 0 < self.alpha <= 0.5:
            raise ValueError(f"alpha must lie in (0, 0.5], got {self.alpha}")
        if int(self.m_reps) < 1:
            raise ValueError("m_reps must be positive")

    @property
    def theta(self) -> float:
        return self.gamma / (1.0 + self.gamma)


def validate_dataset(raw: PairedDataset, allow_continuous_dose: Optional[bool] = None) -> PairedDataset:
    """Check the pair invariants and return ``raw`` unchanged.

    Exposure must be binary unless ``allow_continuous_dose`` is set, in
    which case any value in ``[0, 1]`` is admitted.
    """
    relax = raw.allow_continuous_dose if allow_continuous_dose is None else allow_continuous_dose
    n = raw.y.shape[0]
    for name in ("z", "d", "y"):
        arr = getattr(raw, name)
        if arr.ndim != 2 or arr.shape != (n, 2):
            raise DataError(f"{name} must have shape (n, 2), got {arr.shape}")
    if raw.x.ndim != 3 or raw.x.shape[:2] != (n, 2):
        raise DataError("ragged covariates: x must have shape (n, 2, k)")
    if n < 2:
        raise DataError(f"need at least 2 pairs, got {n}")
    ids = list(raw.pair_ids)
    if len(ids) != n or len(set(ids)) != n:
        raise DataError("pair ids must be unique")

    zsum = raw.z.sum(axis=1)
    zbin = np.isin(raw.z, (0.0, 1.0)).all(axis=1)
    bad = np.flatnonzero(~zbin | (zsum != 1))
    if bad.size:
        raise DataError(f"encouragement not one-per-pair (pair {raw.pair_ids[bad[0]]!r})")

    if relax:
        bad = np.flatnonzero(~(np.isfinite(raw.d) & (raw.d >= 0) & (raw.d <= 1)).all(axis=1))
        if bad.size:
            raise DataError(f"exposure outside [0, 1] (pair {raw.pair_ids[bad[0]]!r})")
    else:
        bad = np.flatnonzero(~np.isin(raw.d, (0.0, 1.0)).all(axis=1))
        if bad.size:
            raise DataError(f"non-binary exposure (pair {raw.pair_ids[bad[0]]!r})")

    bad = np.flatnonzero(~np.isfinite(raw.y).all(axis=1))
    if bad.size:
        raise DataError(f"non-finite outcome (pair {raw.pair_ids[bad[0]]!r})")
    if raw.x.size and not np.isfinite(raw.x).all():
        bad = np.flatnonzero(~np.isfinite(raw.x).all(axis=(1, 2)))
        raise DataError(f"non-finite covariate (pair {raw.pair_ids[bad[0]]!r})")
    return raw


def effect_ratio_estimate(data: PairedDataset) -> float:
    """Ratio of summed outcome differences to summed exposure differences.

    This is the root in ``lambda0`` of the mean adjusted difference.
    """
    den = float(np.sum(data.dd))
    if den == 0.0:
        raise DegenerateInstrumentError("instrument has no net effect on exposure")
    return float(np.sum(data.dy)) / den
