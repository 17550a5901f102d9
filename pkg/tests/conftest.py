import numpy as np
import pytest

from gradedpsi.backend import make_abelian_backend, make_heisenberg_backend
from gradedpsi.symbols import XGrid


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def heis():
    """Small Heisenberg grid containing lambda = 1."""
    return make_heisenberg_backend(0.25, 2.0, 8, 6)


@pytest.fixture
def abel():
    """Integer-spaced frequency grid on R."""
    return make_abelian_backend(1, 32.0, 65)


@pytest.fixture
def xgrid():
    return XGrid(32)
