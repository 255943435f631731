"""Session-scoped domains and factorized operators shared across test modules.

Assembly and LU factorization dominate the test runtime, so the standard
configurations are built once per session and reused; tests must never
mutate them.
"""

import numpy as np
import pytest

from bical import assemble_bilaplacian, standard_configuration


@pytest.fixture(scope="session")
def config48():
    return standard_configuration(48)


@pytest.fixture(scope="session")
def op48(config48):
    op = assemble_bilaplacian(config48.domain)
    op.lu  # force the factorization while the clock is on the fixture
    return op


@pytest.fixture(scope="session")
def config96():
    return standard_configuration(96)


@pytest.fixture(scope="session")
def op96(config96):
    op = assemble_bilaplacian(config96.domain)
    op.lu
    return op


@pytest.fixture()
def rng():
    return np.random.default_rng(20260819)
