import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ivsens.core import DataError, PairedDataset
from ivsens.mcnemar import McNemarDecomp, check_equivalence, mcnemar_decompose, mcnemar_sens_p


def binary_dataset(y_enc, y_ctl):
    n = len(y_enc)
    return PairedDataset.from_differences(y_enc, y_ctl, np.ones(n), np.zeros(n))


def test_all_zero():
    assert mcnemar_decompose(binary_dataset([0, 0, 0], [0, 0, 0])) == McNemarDecomp(0, 0, 0, 0)


def test_counting_instance():
    dec = mcnemar_decompose(binary_dataset([1, 1, 0, 1], [0, 0, 1, 1]))
    assert (dec.t_m, dec.n_discordant, dec.n_both, dec.t_d) == (3, 3, 1, 2)


def test_unit_order_symmetry():
    z = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]])
    y = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    ds = PairedDataset(np.arange(3).astype(object), z, np.zeros((3, 2)), y, np.zeros((3, 2, 0)))
    swapped = PairedDataset(ds.pair_ids, z[:, ::-1], ds.d, y[:, ::-1], ds.x)
    assert mcnemar_decompose(ds) == mcnemar_decompose(swapped)


def test_non_binary_refused():
    with pytest.raises(DataError):
        mcnemar_decompose(binary_dataset([0.5, 1], [0, 0]))


def test_binomial_examples():
    assert mcnemar_sens_p(McNemarDecomp(10, 10, 0, 10), 1.0) == pytest.approx(0.5 ** 10)
    assert mcnemar_sens_p(McNemarDecomp(0, 5, 0, 0), 2.0) == 1.0
    assert mcnemar_sens_p(McNemarDecomp(1, 1, 0, 1), 3.0) == pytest.approx(0.75)
    assert mcnemar_sens_p(McNemarDecomp(0, 0, 0, 0), 1.0) == 1.0


def test_large_counts_stay_finite():
    p = mcnemar_sens_p(McNemarDecomp(1900, 3000, 0, 1900), 1.2)
    assert 0 < p < 1e-10


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 60), st.data())
def test_monotone_in_gamma_and_td(n_disc, data):
    t = data.draw(st.integers(0, n_disc))
    g1 = data.draw(st.floats(1, 10))
    g2 = data.draw(st.floats(1, 10))
    lo, hi = sorted((g1, g2))
    dec = McNemarDecomp(t, n_disc, 0, t)
    assert mcnemar_sens_p(dec, lo) <= mcnemar_sens_p(dec, hi) + 1e-12
    if t < n_disc:
        nxt = McNemarDecomp(t + 1, n_disc, 0, t + 1)
        assert mcnemar_sens_p(nxt, lo) <= mcnemar_sens_p(dec, lo) + 1e-12


def test_all_concordant_degenerates_consistently():
    rep = check_equivalence(binary_dataset([1, 0, 1, 0], [1, 0, 1, 0]), 2.0)
    assert rep.p_mcnemar == 1.0 and rep.p_studentized == pytest.approx(1.0)


@settings(max_examples=80, deadline=None)
@given(st.integers(2, 10), st.integers(0, 100_000), st.sampled_from([1.0, 1.5, 2.0, 4.0]))
def test_equivalence_property(n, seed, gamma):
    rng = np.random.default_rng(seed)
    ds = binary_dataset(rng.integers(0, 2, n), rng.integers(0, 2, n))
    rep = check_equivalence(ds, gamma)
    assert rep.equal
    assert rep.rank_corr == pytest.approx(1.0, abs=1e-12)
