import numpy as np
import pytest

from ldtraj.chain import random_chain, random_prob, two_state


@pytest.fixture
def sym2():
    """Two states flipping at rate 1."""
    return two_state(1.0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def chain3(rng):
    return random_chain(rng, 3)


def random_instance(rng, kmin=2, kmax=6):
    k = int(rng.integers(kmin, kmax + 1))
    return random_chain(rng, k), random_prob(rng, k)


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(test_acceptance.RESULTS.items()):
            terminalreporter.write_line(line)
