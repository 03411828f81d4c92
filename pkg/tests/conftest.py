import numpy as np
import pytest

from boomp.core import Dictionary, decomposition_from_indices

SQ2 = np.sqrt(2.0)


def random_dictionary(rng, n_atoms, dim):
    return Dictionary(rng.standard_normal((n_atoms, dim)))


def random_decomposition(rng, n_atoms, dim):
    """All atoms of a random Gaussian dictionary, projected in index order."""
    d = random_dictionary(rng, n_atoms, dim)
    f = rng.standard_normal(dim)
    return d, f, decomposition_from_indices(d, range(n_atoms), f)


@pytest.fixture
def skew_pair():
    """alpha1 = (1, 0), alpha2 = (1, 1)/sqrt(2), f = (2, 3)."""
    d = Dictionary([[1.0, 0.0], [1.0, 1.0]])
    f = np.array([2.0, 3.0])
    return d, f, decomposition_from_indices(d, [0, 1], f)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        passed, detail = RESULTS[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
