import pytest

from harmonic_zeros import build_construction, count_zeros_ball


@pytest.fixture(scope="session")
def headline():
    """The reference build: counts (1,2,3,4), eps = 1/2, depth 4, 256 bits."""
    return build_construction((1, 2, 3, 4), "0.5", 4, 256)


@pytest.fixture(scope="session")
def small():
    """Cheap two-level build for structural tests."""
    return build_construction((1, 2), "0.5", 2, 128)


@pytest.fixture(scope="session")
def ball_reports(headline):
    """Certified ball censuses of the headline build, shared across tests."""
    return {r: count_zeros_ball(headline, r) for r in (2, 4, 8, 16)}
