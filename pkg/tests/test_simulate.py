import numpy as np
import pytest

from ivsens.core import validate_dataset
from ivsens.design_sens import MixtureSpec, abs_moment, mixture_moments
from ivsens.simulate import (FriedmanConfig, PowerConfig, friedman, gen_friedman, gen_mixture,
                             run_omnibus_size, run_power, run_table3, write_csv)


def test_null_design_has_zero_ratio():
    s = gen_friedman(FriedmanConfig(n=50, a=1.0, seed=2))
    assert s.lambda_m == 0.0
    assert np.allclose(s.y1, s.y0)
    validate_dataset(s.data)


def test_lambda_m_recomputed_from_potential_outcomes():
    s = gen_friedman(FriedmanConfig(n=400, a=2.0, seed=3))
    complier = (s.d1 == 1) & (s.d0 == 0)
    # for compliers y(1) = a * base and y(0) = base, so y(1) - y(0) = base = y(0)
    assert s.lambda_m == pytest.approx(np.mean(s.y0[complier]))
    assert s.lambda_m == pytest.approx(np.sum(s.y1 - s.y0) / np.sum(s.d1 - s.d0))


def test_compliance_shares_and_no_defiers():
    s = gen_friedman(FriedmanConfig(n=5000, seed=4))
    assert np.all(s.d1 >= s.d0)
    assert np.mean((s.d1 == 1) & (s.d0 == 0)) == pytest.approx(0.75, abs=0.02)
    assert np.mean(s.d0 == 1) == pytest.approx(0.125, abs=0.01)


def test_extra_covariates_irrelevant():
    s = gen_friedman(FriedmanConfig(n=30, k=10, a=1.0, seed=5))
    x = s.data.pair_means
    base = s.y0.mean(axis=1)
    x2 = x.copy()
    x2[:, 5:] = 0.0
    assert np.allclose(friedman(x), friedman(x2))
    assert s.data.k == 10


def test_redraw_when_no_compliers():
    # with four units and p_c = 0.2 a draw without compliers happens often
    cfg = FriedmanConfig(n=2, p_c=0.2, p_n=0.4, p_a=0.4, seed=0)
    samples = [gen_friedman(cfg, r) for r in range(30)]
    assert any(s.redraws > 0 for s in samples)
    assert all(np.sum(s.d1 - s.d0) != 0 for s in samples)


def test_replicates_reproducible():
    a = gen_friedman(FriedmanConfig(seed=7), rep=3).data
    b = gen_friedman(FriedmanConfig(seed=7), rep=3).data
    assert np.array_equal(a.y, b.y)


def test_k_below_five_refused():
    with pytest.raises(ValueError):
        FriedmanConfig(k=4)


def test_mixture_degenerate_and_moments(rng):
    z = gen_mixture(MixtureSpec(3.0, 1e-12), 50, rng)
    assert np.allclose(z, 3.0)
    spec = MixtureSpec.with_compliance(4.1, 8.9, 0.75)
    z = gen_mixture(spec, 200_000, rng)
    mean, e_abs = mixture_moments(spec)
    assert abs(z.mean() - mean) < 3 * z.std() / np.sqrt(z.size)
    assert abs(np.abs(z).mean() - e_abs) < 3 * np.abs(z).std() / np.sqrt(z.size)


def test_table3_small_run_structure(tmp_path):
    rows = run_table3([FriedmanConfig(n=30, a=2.0, seed=1)], reps=3, m_reps=200)
    assert [r["engine"] for r in rows] == ["intercept", "regression", "pairs_of_pairs"]
    assert all(0 <= r["size"] <= 1 and r["ci_length"] > 0 for r in rows)
    write_csv(rows, tmp_path / "t3.csv")
    assert (tmp_path / "t3.csv").read_text().startswith("dgp,a,n,k,engine")


def test_power_curves_monotone():
    cfg = PowerConfig.septic_vs_nonseptic(60, 20, reps=40, m_reps=300, seed=2,
                                          gammas=(1.0, 1.5, 2.0, 3.0))
    rows = run_power(cfg)
    for sub in ("septic", "non-septic"):
        p = [r["power"] for r in rows if r["subgroup"] == sub]
        assert all(a >= b for a, b in zip(p, p[1:]))


def test_power_config_validation():
    with pytest.raises(ValueError):
        PowerConfig(subgroups={}, gammas=(2.0, 1.0))
    with pytest.raises(ValueError):
        PowerConfig(subgroups={}, reps=0)


def test_omnibus_size_runner():
    out = run_omnibus_size(FriedmanConfig(n=40, seed=3), reps=3, m_reps=200, grid_size=11)
    assert out["reps"] == 3 and 0 <= out["rejection_rate"] <= 1
