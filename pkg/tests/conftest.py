import numpy as np
import pytest

from onebit_doa.geometry import build_geometry, selection_matrices


@pytest.fixture(scope="session")
def coprime6():
    """Six-element co-prime array with D=9, v=8."""
    return build_geometry([0, 2, 3, 4, 6, 9])


@pytest.fixture(scope="session")
def coprime6_sel(coprime6):
    return selection_matrices(coprime6)


@pytest.fixture(scope="session")
def nested10():
    return build_geometry([1, 2, 3, 4, 5, 6, 12, 18, 24, 30])


@pytest.fixture(scope="session")
def nested10_sel(nested10):
    return selection_matrices(nested10)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240615)
