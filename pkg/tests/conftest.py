import numpy as np
import pytest
from hypothesis import settings

from orrlab.spectral import Grid
from orrlab.weights import MultiplierSpec

settings.register_profile("orrlab", max_examples=40, deadline=None)
settings.load_profile("orrlab")


@pytest.fixture
def grid():
    return Grid(8, 64)


@pytest.fixture
def unit_grid():
    """Grid with Delta eta = 1, so integer eta values are on-grid."""
    return Grid(4, 128, 2 * np.pi)


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(1234))


@pytest.fixture
def spec():
    return MultiplierSpec()
