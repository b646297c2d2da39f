import numpy as np
import pytest

from privlab import (DensityOperator, HilbertSpace, StateVector,
                     random_density_operator, random_pure_state, substream)


@pytest.fixture
def rand_state():
    def make(dims, labels, seed):
        return random_pure_state(HilbertSpace(tuple(dims), tuple(labels)),
                                 substream(seed))
    return make


@pytest.fixture
def rand_density():
    def make(dims, labels, seed, rank=None):
        return random_density_operator(HilbertSpace(tuple(dims), tuple(labels)),
                                       substream(seed), rank=rank)
    return make


def assert_povm(povm, dim, atol=1e-9):
    total = np.zeros((dim, dim), dtype=np.complex128)
    for el in povm.elements:
        assert np.allclose(el, el.conj().T, atol=1e-10)
        vals = np.linalg.eigvalsh(el)
        assert vals.min() > -1e-10
        total += el
    assert np.allclose(total, np.eye(dim), atol=atol)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
