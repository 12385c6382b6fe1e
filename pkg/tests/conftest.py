import numpy as np
import pytest

from hyperprandtl.grid import FieldGrid


@pytest.fixture(scope="session")
def grid():
    return FieldGrid(16, 64, 20.0, 2.0)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240601)
