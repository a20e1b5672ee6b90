import numpy as np
import pytest

from ivsens.core import PairedDataset


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def make_dataset(rng, n, k=0, effect=1.0, noise=1.0, binary_dose=True):
    """Random pairs, encouraged unit first, with an outcome shift of ``effect`` per unit of dose."""
    x = rng.random((n, k))
    d_enc = (rng.random(n) < 0.8).astype(float) if binary_dose else rng.random(n)
    d_ctl = (rng.random(n) < 0.2).astype(float) if binary_dose else rng.random(n)
    base = x.sum(axis=1) if k else np.zeros(n)
    y_enc = base + effect * d_enc + noise * rng.standard_normal(n)
    y_ctl = base + effect * d_ctl + noise * rng.standard_normal(n)
    return PairedDataset.from_differences(y_enc, y_ctl, d_enc, d_ctl, x_pair=x if k else None)


@pytest.fixture
def dataset_factory(rng):
    return lambda n, **kw: make_dataset(rng, n, **kw)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for key in sorted(results):
            terminalreporter.write_line(results[key])
