import math

import pytest

from physics.fockspace import HilbertSpace
from physics.schemas import SqueezeParam, SystemParams


@pytest.fixture
def xi_i():
    """xi = i, the squeezing reached at 2 g_cs t = 1"""
    return SqueezeParam(r=1.0, phi=0.5 * math.pi)


@pytest.fixture
def osc120():
    return HilbertSpace(120, has_qubit=False)


@pytest.fixture
def osc200():
    return HilbertSpace(200, has_qubit=False)


@pytest.fixture
def desk_params():
    return SystemParams.at_first_j0_root(g=1e-2)
