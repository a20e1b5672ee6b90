import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ivsens.adjusted import AdjustedDiffs, gamma_shift
from ivsens.nonbipartite import PairsOfPairs, pair_pairs
from ivsens.variance import (build_q_groups, build_q_intercept, build_q_regression,
                             design_from_matrix, se_pop, se_q)
from oracles import se_direct


def test_intercept_leverages():
    assert np.allclose(build_q_intercept(4).hat_diag, 0.25)
    assert np.allclose(build_q_intercept(2).hat_diag, 0.5)
    with pytest.raises(ValueError):
        build_q_intercept(1)


def test_hand_instance_two_pairs():
    assert se_q(np.array([2.0, 0.0]), build_q_intercept(2)) == pytest.approx(1.0)


def test_constant_vector_zero():
    assert se_q(np.full(7, 3.3), build_q_intercept(7)) == pytest.approx(0.0, abs=1e-14)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=40))
def test_intercept_equals_conventional(l):
    l = np.array(l)
    g = gamma_shift(AdjustedDiffs(0.0, l), 1.0)
    assert se_q(l, build_q_intercept(len(l))) == pytest.approx(g.se, rel=1e-9, abs=1e-9)


def test_regression_design_k0_is_intercept(dataset_factory):
    ds = dataset_factory(10)
    q = build_q_regression(ds)
    assert q.kind == "intercept"


def test_duplicate_column_dropped():
    rng = np.random.default_rng(0)
    x = rng.random((12, 2))
    q = build_q_regression(np.column_stack([x, x[:, 0]]))
    assert q.rank == 3 and len(q.dropped) == 1
    assert q.hat_diag.sum() == pytest.approx(3.0)


def test_pair_means():
    from ivsens.core import MatchedPair, PairedDataset
    ds = PairedDataset.from_pairs([MatchedPair(i, (1, 0), (1, 0), (1.0, 0.0), ((1.0,), (3.0,)))
                                   for i in range(3)])
    assert np.allclose(ds.pair_means, 2.0)


def test_wide_design_refused():
    with pytest.raises(ValueError, match="wider"):
        build_q_regression(np.random.default_rng(0).random((4, 3)))


def test_perfect_linear_fit_near_zero_se():
    rng = np.random.default_rng(3)
    prev = np.inf
    for n in (15, 100, 1000):
        x = rng.random((n, 2))
        l = 1.0 + 2.0 * x[:, 0] - x[:, 1]
        q = build_q_regression(x)
        assert se_q(l, q, rmse=True) == pytest.approx(0.0, abs=1e-12)
        # leverage scaling moves l slightly off the column space, so only ~0
        rel = se_q(l, q) / se_q(l, build_q_intercept(n))
        assert rel < 0.15 and rel < prev
        prev = rel


@settings(max_examples=40, deadline=None)
@given(st.integers(5, 30), st.integers(1, 3), st.integers(0, 10_000))
def test_matches_explicit_hat_matrix(n, k, seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, k))
    if n <= k + 2:
        return
    q = build_q_regression(x)
    l = rng.normal(size=n)
    assert se_q(l, q) == pytest.approx(se_direct(l, q.q), rel=1e-8)


def test_column_reparameterization_invariance():
    rng = np.random.default_rng(5)
    q = np.column_stack([np.ones(20), rng.random((20, 3))])
    a = rng.normal(size=(4, 4)) + 4 * np.eye(4)
    l = rng.normal(size=20)
    assert se_q(l, design_from_matrix(q)) == pytest.approx(se_q(l, design_from_matrix(q @ a)), rel=1e-9)


def test_stacked_rows_match_single():
    rng = np.random.default_rng(2)
    q = build_q_regression(rng.random((10, 2)))
    ls = rng.normal(size=(5, 10))
    assert np.allclose(se_q(ls, q), [se_q(l, q) for l in ls])


def test_se_pop_hand_instance():
    pop = PairsOfPairs(np.array([1, 0, 3, 2]), None, 0.0)
    assert se_pop(np.array([1.0, 3.0, 2.0, 2.0]), pop) == pytest.approx(0.5)
    assert se_pop(np.full(4, 7.0), pop) == 0.0


def test_se_pop_equals_indicator_design():
    rng = np.random.default_rng(4)
    pop = pair_pairs(rng.random((20, 3)))
    q = build_q_groups(pop.groups())
    assert np.allclose(q.hat_diag, 0.5)
    l = rng.normal(size=20)
    assert se_pop(l, pop) == pytest.approx(se_q(l, q), abs=1e-12)


def test_se_pop_triple_and_label_permutation():
    rng = np.random.default_rng(6)
    x = rng.random((9, 2))
    pop = pair_pairs(x)
    q = build_q_groups(pop.groups())
    tri = list(pop.triple)
    assert np.allclose(q.hat_diag[tri], 1.0 / 3.0)
    l = rng.normal(size=9)
    perm = rng.permutation(9)
    pop_p = pair_pairs(x[perm])
    assert se_pop(l[perm], pop_p) == pytest.approx(se_pop(l, pop), rel=1e-12)


def test_malformed_pairing_refused():
    with pytest.raises(ValueError, match="malformed"):
        se_pop(np.arange(4.0), PairsOfPairs(np.array([1, 2, 3, 0]), None, 0.0))


def test_leverage_one_refused():
    q = design_from_matrix(np.column_stack([np.ones(4), [1.0, 0, 0, 0]]))
    with pytest.raises(ValueError, match="leverage"):
        se_q(np.arange(4.0), q)


def test_rmse_variant():
    rng = np.random.default_rng(8)
    x = rng.random((30, 2))
    q = build_q_regression(x)
    l = rng.normal(size=30)
    resid = l - q.basis @ (q.basis.T @ l)
    expect = np.sqrt(resid @ resid / (30 - 3)) / np.sqrt(30)
    assert se_q(l, q, rmse=True) == pytest.approx(expect)


def test_regression_shrinks_se_when_covariates_explain():
    rng = np.random.default_rng(9)
    ratios = []
    for r2_weight in (0.0, 1.0, 3.0):
        vals = []
        for _ in range(200):
            x = rng.random((60, 2))
            l = r2_weight * 4 * x[:, 0] + rng.normal(size=60)
            vals.append(se_q(l, build_q_regression(x)) / se_q(l, build_q_intercept(60)))
        ratios.append(np.mean(vals))
    assert ratios[2] < ratios[1] < 1.0
    assert ratios[0] == pytest.approx(1.0, abs=0.05)
