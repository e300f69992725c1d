import math

import numpy as np
import pytest
from hypothesis import settings

from fraclab import BoundaryFunction, XGrid, make_order, solve_profile_closed_form

settings.register_profile("fraclab", deadline=None, max_examples=40, derandomize=True)
settings.load_profile("fraclab")

GAMMAS = (0.5, 1.3, 1.5, 2.5, 2.7)


def energy_constant(gamma):
    """Independent closed form of J = |c|, confirmed against 30-digit mpmath quadrature."""
    m = math.floor(gamma)
    s = gamma - m
    return math.factorial(m) * 2.0 ** (1 - 2 * s) * math.gamma(1 - s) / math.gamma(gamma)


@pytest.fixture(scope="session")
def closed_profiles():
    cache = {}

    def get(gamma, ny=2048, y_max=30.0):
        key = (gamma, ny, y_max)
        if key not in cache:
            cache[key] = solve_profile_closed_form(make_order(gamma), y_max, ny)
        return cache[key]

    return get


@pytest.fixture(scope="session")
def grid256():
    return XGrid(1, 256)


@pytest.fixture
def cos_trace(grid256):
    return BoundaryFunction(grid256, np.cos(grid256.nodes))
