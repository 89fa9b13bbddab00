import pytest

from dynlab import build_induced_map, chebyshev, complex_quadratic, construct_nice_couple, real_quadratic


@pytest.fixture(scope="session")
def cheb():
    return chebyshev()


@pytest.fixture(scope="session")
def x2():
    return real_quadratic(-2.0)


@pytest.fixture(scope="session")
def x18():
    return real_quadratic(-1.8)


@pytest.fixture(scope="session")
def z2():
    return complex_quadratic(0.0)


@pytest.fixture(scope="session")
def basilica():
    return complex_quadratic(-1.0)


@pytest.fixture(scope="session")
def couple_x2(x2):
    return construct_nice_couple(x2, 0.05, 8.0)


@pytest.fixture(scope="session")
def couple_cheb(cheb):
    return construct_nice_couple(cheb, 0.02, 8.0)


@pytest.fixture(scope="session")
def couple_x18(x18):
    return construct_nice_couple(x18, 0.05, 8.0)


@pytest.fixture(scope="session")
def couple_x18_small(x18):
    return construct_nice_couple(x18, 0.04, 8.0)


@pytest.fixture(scope="session")
def induced_x2(x2, couple_x2):
    return build_induced_map(x2, couple_x2, 14)
