"""Dose-adjusted paired differences and their bias-shifted form."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import PairedDataset

# Relative size below which a standard error is treated as exactly zero.
SE_ZERO_RTOL = 1e-12


def shift_factor(gamma: float) -> float:
    """``(gamma - 1) / (gamma + 1)``, equal to ``2 * theta - 1``."""
    if gamma < 1:
        raise ValueError(f"gamma must be >= 1, got {gamma}")
    if np.isinf(gamma):
        return 1.0
    return (gamma - 1.0) / (gamma + 1.0)


@dataclass(frozen=True, eq=False)
class AdjustedDiffs:
    lambda0: float
    zeta: np.ndarray

    @property
    def abs_zeta(self) -> np.ndarray:
        return np.abs(self.zeta)

    @property
    def n(self) -> int:
        return self.zeta.shape[0]

    def negate(self) -> "AdjustedDiffs":
        """Differences for the less-than alternative."""
        return AdjustedDiffs(self.lambda0, -self.zeta)


@dataclass(frozen=True, eq=False)
class GammaShifted:
    gamma: float
    l: np.ndarray
    l_bar: float
    se: float
    t_stat: float
    degenerate: bool


def adjusted_diffs(data: PairedDataset, lambda0: float) -> AdjustedDiffs:
    return AdjustedDiffs(float(lambda0), data.dy - lambda0 * data.dd)


def studentize(l_bar: float, se: float, scale: float) -> tuple[float, bool]:
    """Return ``(l_bar / se, degenerate)``.

    A zero standard error maps to ``+inf`` when ``l_bar > 0`` and to
    ``-inf`` otherwise, so that a test never rejects on a non-positive
    mean.
    """
    if se <= SE_ZERO_RTOL * max(scale, np.finfo(float).tiny):
        return (np.inf if l_bar > SE_ZERO_RTOL * scale else -np.inf), True
    return l_bar / se, False


def gamma_shift(adj: AdjustedDiffs, gamma: float) -> GammaShifted:
    n = adj.n
    if n < 2:
        raise ValueError("need at least two pairs for a standard error")
    l = adj.zeta - shift_factor(gamma) * adj.abs_zeta
    l_bar = float(l.mean())
    se = float(np.sqrt(np.sum((l - l_bar) ** 2) / (n * (n - 1))))
    t, degenerate = studentize(l_bar, se, float(np.max(np.abs(l))))
    return GammaShifted(float(gamma), l, l_bar, se, t, degenerate)
