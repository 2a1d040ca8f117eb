import pytest

import harvestsim as hs


@pytest.fixture(scope="session")
def device():
    return hs.default_device()


@pytest.fixture(scope="session")
def loads():
    return hs.default_loads()
