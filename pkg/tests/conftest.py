import numpy as np
import pytest

from henonlocus.dynamics import Params
from henonlocus.leaves import BoxGeometry
from henonlocus.region import region_constants


@pytest.fixture(scope="session")
def pstar():
    return Params(-25.0, 0.1)


@pytest.fixture(scope="session")
def rc(pstar):
    return region_constants(pstar)


@pytest.fixture(scope="session")
def geometry(pstar, rc):
    return BoxGeometry(pstar, rc)


@pytest.fixture()
def rng():
    return np.random.default_rng(7)
