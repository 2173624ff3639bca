import pytest

from statinv import Grid, build_integration_operator


@pytest.fixture(scope="session")
def op64():
    return build_integration_operator(Grid(64))


@pytest.fixture(scope="session")
def op256():
    return build_integration_operator(Grid(256))


@pytest.fixture(scope="session")
def op512():
    return build_integration_operator(Grid(512))


@pytest.fixture(scope="session")
def op1024():
    return build_integration_operator(Grid(1024))
