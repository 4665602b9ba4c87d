import pytest

from kinklab import build_kink, make_family


@pytest.fixture(scope="session")
def phi4():
    return make_family("phi4")


@pytest.fixture(scope="session")
def phi6():
    return make_family("phi6")


@pytest.fixture(scope="session")
def phi4_kink(phi4):
    pair = phi4.pair(-1.0, 1.0)
    return build_kink(phi4, pair, 20.0 / pair.omega, 0.01)


@pytest.fixture(scope="session")
def phi6_kink(phi6):
    pair = phi6.pair(0.0, 1.0)
    return build_kink(phi6, pair, 20.0 / pair.omega, 0.01)


@pytest.fixture(scope="session")
def phi6_kink_wide(phi6):
    # wider grid for dynamics (domain R_dom up to 40)
    pair = phi6.pair(0.0, 1.0)
    return build_kink(phi6, pair, 30.0 / pair.omega, 0.01)
