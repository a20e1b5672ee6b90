"""Synthetic data generators and the size, interval-length and power studies.

Two generators are provided.  :func:`gen_friedman` draws matched pairs
with noncompliance whose outcomes follow the Friedman test function,
optionally multiplied by ``a`` for treated units, which makes the effect
heterogeneous in the covariates.  :func:`gen_mixture` draws adjusted
differences from the three-component mixture used for design sensitivity.

Every replicate owns a random stream keyed by ``(seed, replicate)``, so
results do not depend on the order in which replicates are run.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .core import PairedDataset
from .design_sens import MixtureSpec, design_sensitivity
from .heterogeneity import omnibus_test
from .nonbipartite import pair_pairs
from .reference import ReferenceSampler, sens_interval, sens_test_zeta
from .variance import build_q_groups, build_q_intercept, build_q_regression

log = logging.getLogger(__name__)

ENGINES = ("intercept", "regression", "pairs_of_pairs")
MAX_REDRAWS = 100


def stream(seed: int, *keys: int) -> np.random.Generator:
    """Independent Philox stream for ``(seed, *keys)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, keys)])))


def friedman(x: np.ndarray) -> np.ndarray:
    return (10.0 * np.sin(np.pi * x[:, 0] * x[:, 1]) + 20.0 * (x[:, 2] - 0.5) ** 2
            + 10.0 * np.exp(x[:, 3]) + 5.0 * (x[:, 4] - 0.5) ** 3)


@dataclass(frozen=True)
class FriedmanConfig:
    n: int = 100
    k: int = 5
    a: float = 1.0
    p_c: float = 0.75
    p_n: float = 0.125
    p_a: float = 0.125
    noise_sd: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.k < 5:
            raise ValueError("the outcome model needs k >= 5 covariates")
        if self.n < 2:
            raise ValueError("need n >= 2 pairs")
        if not math.isclose(self.p_c + self.p_n + self.p_a, 1.0, abs_tol=1e-12):
            raise ValueError("compliance probabilities must sum to 1")

    @property
    def label(self) -> str:
        return "prop_dose" if self.a == 1 else "effect_mod"


@dataclass(frozen=True, eq=False)
class FriedmanSample:
    data: PairedDataset
    lambda_m: float
    redraws: int
    y1: np.ndarray = field(repr=False)
    y0: np.ndarray = field(repr=False)
    d1: np.ndarray = field(repr=False)
    d0: np.ndarray = field(repr=False)


def gen_friedman(config: FriedmanConfig, rep: int = 0) -> FriedmanSample:
    """One simulated study and its realized effect ratio ``lambda_m``.

    ``lambda_m`` is the ratio of summed individual effects on outcome to
    summed effects on exposure over all ``2n`` units.  A draw with no
    compliers is discarded and redrawn on the next sub-stream.
    """
    n, k = config.n, config.k
    for sub in range(MAX_REDRAWS):
        rng = stream(config.seed, rep, sub)
        x = rng.random((n, k))
        cls = rng.random((n, 2))
        complier = cls < config.p_c
        always = cls >= config.p_c + config.p_n
        d1 = (complier | always).astype(float)
        d0 = always.astype(float)
        base = friedman(x)[:, None] + config.noise_sd * rng.standard_normal((n, 2))
        y1 = np.where(d1 == 1, config.a * base, base)
        y0 = np.where(d0 == 1, config.a * base, base)
        den = float(np.sum(d1 - d0))
        if den == 0:
            continue
        lam = float(np.sum(y1 - y0)) / den
        enc = (rng.random(n) < 0.5).astype(int)
        rows = np.arange(n)
        ctl = 1 - enc
        data = PairedDataset.from_differences(
            y1[rows, enc], y0[rows, ctl], d1[rows, enc], d0[rows, ctl], x_pair=x)
        return FriedmanSample(data, lam, sub, y1, y0, d1, d0)
    raise RuntimeError("no compliers drawn after repeated attempts")


def engine_design(data: PairedDataset, engine: str):
    if engine == "intercept":
        return build_q_intercept(data.n)
    if engine == "regression":
        return build_q_regression(data)
    if engine == "pairs_of_pairs":
        return build_q_groups(pair_pairs(data.pair_means).groups())
    raise ValueError(f"unknown engine {engine!r}")


def _progress(callback, done, total):
    if callback is not None:
        callback(done, total)


def run_table3(configs: Iterable[FriedmanConfig], alpha: float = 0.1, reps: int = 2000,
               m_reps: int = 2000, engines: Sequence[str] = ENGINES,
               progress: Optional[Callable] = None) -> list:
    """Size of the two-sided Gamma = 1 test of ``lambda = lambda_m`` and mean interval length.

    Returns one row per ``(config, engine)``.  All engines of a replicate
    share the same data and the same reference uniforms.
    """
    rows = []
    for cfg in configs:
        rejects = {e: 0 for e in engines}
        lengths = {e: [] for e in engines}
        redraws = 0
        for r in range(reps):
            sample = gen_friedman(cfg, r)
            redraws += sample.redraws
            data = sample.data
            sampler = ReferenceSampler(data.n, m_reps, _inner_seed(cfg.seed, r))
            zeta = data.dy - sample.lambda_m * data.dd
            for e in engines:
                q = engine_design(data, e)
                res = sens_test_zeta(zeta, sample.lambda_m, 1.0, alpha, q, sampler, "two_sided")
                rejects[e] += res.reject
                ci = sens_interval(data, 1.0, alpha, q=q, sampler=sampler)
                lengths[e].append(ci.hi - ci.lo)
            _progress(progress, r + 1, reps)
        for e in engines:
            size = rejects[e] / reps
            rows.append({
                "dgp": cfg.label, "a": cfg.a, "n": cfg.n, "k": cfg.k, "engine": e,
                "size": size, "size_mc_se": math.sqrt(max(size * (1 - size), 1e-12) / reps),
                "ci_length": float(np.mean(lengths[e])), "reps": reps, "m_reps": m_reps,
                "alpha": alpha, "seed": cfg.seed, "redraws": redraws,
            })
    return rows


def _inner_seed(seed: int, rep: int) -> int:
    return int(np.random.SeedSequence([int(seed), int(rep), 7919]).generate_state(1)[0])


def gen_mixture(spec: MixtureSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` iid adjusted differences from the three-component mixture."""
    w_plus, w_zero, w_minus = spec.weights
    comp = rng.choice(3, size=n, p=[w_plus, w_zero, w_minus])
    shift = np.array([spec.shift, 0.0, -spec.shift])[comp]
    if spec.noise == "normal":
        eps = rng.normal(0.0, spec.sigma, n)
    elif spec.noise == "laplace":
        eps = rng.laplace(0.0, spec.sigma / math.sqrt(2.0), n)
    else:
        raise ValueError("sampling needs a named noise family (normal or laplace)")
    return eps + shift


@dataclass(frozen=True)
class PowerConfig:
    subgroups: dict
    gammas: tuple = (1.0, 1.25, 1.5, 1.75, 2.0, 2.25, 2.5)
    alpha: float = 0.05
    reps: int = 1000
    m_reps: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        g = list(self.gammas)
        if g != sorted(g) or g[0] < 1:
            raise ValueError("gamma grid must be sorted ascending and >= 1")

    @classmethod
    def septic_vs_nonseptic(cls, n_septic: int, n_nonseptic: int, p_c: float = 0.75, **kw):
        subgroups = {
            "septic": (MixtureSpec.with_compliance(6.8, 25.3, p_c), n_septic),
            "non-septic": (MixtureSpec.with_compliance(4.1, 8.9, p_c), n_nonseptic),
        }
        return cls(subgroups=subgroups, **kw)


def run_power(config: PowerConfig, progress: Optional[Callable] = None) -> list:
    """Rejection frequency of the greater-than test of ``lambda = lambda0`` per subgroup and gamma.

    Within a replicate the same reference uniforms serve every gamma, so each
    replicate's decisions are monotone in gamma and so are the curves.
    """
    rows = []
    for s_idx, (name, (spec, n)) in enumerate(config.subgroups.items()):
        q = build_q_intercept(n)
        hits = np.zeros(len(config.gammas), dtype=int)
        for r in range(config.reps):
            rng = stream(config.seed, s_idx, r)
            zeta = gen_mixture(spec, n, rng)
            sampler = ReferenceSampler(n, config.m_reps, _inner_seed(config.seed * 1000 + s_idx, r))
            for j, g in enumerate(config.gammas):
                res = sens_test_zeta(zeta, spec.lambda0, g, config.alpha, q, sampler)
                hits[j] += res.reject
                if not res.reject:
                    # coupled draws make rejection monotone in gamma
                    break
            _progress(progress, r + 1, config.reps)
        ds = design_sensitivity(spec)
        for j, g in enumerate(config.gammas):
            rows.append({"subgroup": name, "gamma": g, "n": n, "power": hits[j] / config.reps,
                         "reps": config.reps, "m_reps": config.m_reps, "alpha": config.alpha,
                         "design_sensitivity": ds, "seed": config.seed})
    return rows


def run_omnibus_size(config: FriedmanConfig, reps: int = 500, beta: float = 0.01,
                     alpha: float = 0.05, m_reps: int = 1000, grid_size: int = 101,
                     progress: Optional[Callable] = None) -> dict:
    """Rejection rate of the omnibus proportional-dose test on the Friedman design."""
    rejects = 0
    flags = 0
    for r in range(reps):
        data = gen_friedman(config, r).data
        res = omnibus_test(data, beta=beta, alpha=alpha, grid_size=grid_size, m_reps=m_reps,
                           seed=_inner_seed(config.seed, r))
        rejects += res.reject
        flags += res.flag is not None
        _progress(progress, r + 1, reps)
    rate = rejects / reps
    return {"dgp": config.label, "a": config.a, "n": config.n, "k": config.k, "reps": reps,
            "rejection_rate": rate, "mc_se": math.sqrt(max(rate * (1 - rate), 1e-12) / reps),
            "beta": beta, "alpha": alpha, "m_reps": m_reps, "flagged": flags, "seed": config.seed}


def write_csv(rows: Sequence[dict], path) -> None:
    if not rows:
        raise ValueError("nothing to write")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
