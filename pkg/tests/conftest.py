import pytest

from epstein_zeros.quadforms import class_group


@pytest.fixture(scope="session")
def g4():
    return class_group(-4)


@pytest.fixture(scope="session")
def g15():
    return class_group(-15)


@pytest.fixture(scope="session")
def g23():
    return class_group(-23)
