import pytest

from rumorlab.analytic import InitialCondition
from rumorlab.stifling import Constant, Geometric

SEED = 20240417


@pytest.fixture
def seed():
    return SEED


@pytest.fixture
def classical():
    return InitialCondition.classical()


@pytest.fixture
def constant1():
    return Constant(1)


@pytest.fixture
def constant2():
    return Constant(2)


@pytest.fixture
def geometric_half():
    return Geometric(0.5)
