import numpy as np
import pytest

from peridyn.material import default_model


@pytest.fixture(scope="session")
def model():
    return default_model()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
