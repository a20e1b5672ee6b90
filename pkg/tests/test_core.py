import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ivsens.core import (DataError, DegenerateInstrumentError, MatchedPair, PairedDataset,
                         SensitivityParams, effect_ratio_estimate, validate_dataset)


def pair(pid, z=(1, 0), d=(1, 0), y=(1.0, 0.0), x=((), ())):
    return MatchedPair(pid, z, d, y, x)


def test_valid_dataset_passes_unchanged():
    ds = PairedDataset.from_pairs([pair("a"), pair("b", z=(0, 1), d=(0, 1))])
    assert validate_dataset(ds) is ds
    assert ds.n == 2


@pytest.mark.parametrize("bad, message", [
    (pair("b", z=(1, 1)), "encouragement not one-per-pair"),
    (pair("b", z=(0, 0)), "encouragement not one-per-pair"),
    (pair("b", d=(2, 0)), "non-binary exposure"),
    (pair("b", y=(1.0, np.nan)), "non-finite outcome"),
    (pair("b", y=(np.inf, 0.0)), "non-finite outcome"),
])
def test_invariant_violations(bad, message):
    ds = PairedDataset.from_pairs([pair("a"), bad])
    with pytest.raises(DataError, match=message):
        validate_dataset(ds)


def test_ragged_covariates_rejected():
    with pytest.raises(DataError, match="ragged"):
        PairedDataset.from_pairs([pair("a", x=((1.0,), (2.0,))), pair("b", x=((1.0, 2.0), (3.0, 4.0)))])


def test_single_pair_rejected():
    with pytest.raises(DataError, match="at least 2"):
        validate_dataset(PairedDataset.from_pairs([pair("a")]))


def test_duplicate_ids_rejected():
    with pytest.raises(DataError, match="unique"):
        validate_dataset(PairedDataset.from_pairs([pair("a"), pair("a")]))


def test_continuous_dose_needs_flag():
    ds = PairedDataset.from_pairs([pair("a", d=(0.7, 0.2)), pair("b")])
    with pytest.raises(DataError):
        validate_dataset(ds)
    assert validate_dataset(ds, allow_continuous_dose=True) is ds


def test_ratio_of_sums_hand_instance():
    ds = PairedDataset.from_differences([2, 4, 0], [0, 0, 0], [1, 1, 0], [0, 0, 0])
    assert effect_ratio_estimate(ds) == pytest.approx(3.0)


def test_perfect_compliance_constant_effect():
    rng = np.random.default_rng(1)
    base = rng.normal(size=(20, 2))
    ds = PairedDataset.from_differences(base[:, 0] + 3, base[:, 1], np.ones(20), np.zeros(20))
    lam = effect_ratio_estimate(ds)
    assert lam == pytest.approx(np.mean(ds.dy))
    ds0 = PairedDataset.from_differences(base[:, 0] + 3, base[:, 0], np.ones(20), np.zeros(20))
    assert effect_ratio_estimate(ds0) == pytest.approx(3.0)


def test_degenerate_instrument():
    ds = PairedDataset.from_differences([1, 2], [0, 0], [1, 0], [1, 0])
    with pytest.raises(DegenerateInstrumentError, match="no net effect"):
        effect_ratio_estimate(ds)


def test_mean_adjusted_difference_vanishes_at_estimate(dataset_factory):
    ds = dataset_factory(30)
    lam = effect_ratio_estimate(ds)
    assert np.mean(ds.dy - lam * ds.dd) == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=2, max_value=25), st.integers(0, 10_000), st.floats(-5, 5))
def test_order_invariance_and_dose_shift(n, seed, c):
    rng = np.random.default_rng(seed)
    y = rng.normal(size=(n, 2))
    d = np.column_stack([np.ones(n), (rng.random(n) < 0.3).astype(float)])
    z = np.tile([1.0, 0.0], (n, 1))
    ds = PairedDataset(np.arange(n).astype(object), z, d, y, np.zeros((n, 2, 0)))
    if np.sum(ds.dd) == 0:
        return
    lam = effect_ratio_estimate(ds)
    # swap units within a random subset of pairs and shuffle pair order
    flip = rng.random(n) < 0.5
    idx = np.where(flip[:, None], [1, 0], [0, 1])
    perm = rng.permutation(n)
    swapped = PairedDataset(ds.pair_ids[perm], np.take_along_axis(z, idx, 1)[perm],
                            np.take_along_axis(d, idx, 1)[perm], np.take_along_axis(y, idx, 1)[perm],
                            np.zeros((n, 2, 0)))
    assert effect_ratio_estimate(swapped) == pytest.approx(lam, rel=1e-9, abs=1e-9)
    shifted = PairedDataset(ds.pair_ids, z, d, y + c * d, ds.x)
    assert effect_ratio_estimate(shifted) == pytest.approx(lam + c, rel=1e-9, abs=1e-9)
    canon = swapped.canonical()
    assert np.all(canon.z[:, 0] == 1)
    assert np.allclose(canon.dy, swapped.dy)


def test_sensitivity_params():
    p = SensitivityParams(gamma=3.0)
    assert p.theta == 0.75
    assert SensitivityParams().theta == 0.5
    with pytest.raises(ValueError):
        SensitivityParams(gamma=0.5)
    with pytest.raises(ValueError):
        SensitivityParams(alpha=0.7)


def test_pair_roundtrip_and_subset(dataset_factory):
    ds = dataset_factory(6, k=2)
    again = PairedDataset.from_pairs(ds.pairs)
    assert np.allclose(again.y, ds.y) and np.allclose(again.x, ds.x)
    sub = ds.subset(np.arange(6) < 3)
    assert sub.n == 3
    assert np.allclose(ds.pair_means, ds.x.mean(axis=1))
