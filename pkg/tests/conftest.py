import math

import numpy as np
import pytest

from tenfac.tensor import LoadingSet, multi_mode_product


def orthonormal_loadings(rng, dims, ranks):
    """Loadings with ``A^T A = p I`` drawn from random orthonormal bases."""
    mats = []
    for p, r in zip(dims, ranks):
        q, _ = np.linalg.qr(rng.standard_normal((p, r)))
        mats.append(math.sqrt(p) * q)
    return LoadingSet(tuple(mats))


def noiseless_series(rng, dims, ranks, T, weights=None):
    """Exact low-rank series; ``weights[k]`` scales the mode-k factor directions."""
    loadings = orthonormal_loadings(rng, dims, ranks)
    factors = rng.standard_normal((T,) + tuple(ranks))
    if weights is not None:
        factors = multi_mode_product(factors, [np.diag(w) for w in weights], offset=1)
    return multi_mode_product(factors, list(loadings), offset=1), loadings, factors


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def cube():
    """2x2x2 tensor whose column-major data is 1..8."""
    return np.arange(1.0, 9.0).reshape((2, 2, 2), order="F")


def pytest_terminal_summary(terminalreporter):
    import sys
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for line in results:
        terminalreporter.write_line(line)
