import numpy as np
import pytest

from stressbed import make_space


@pytest.fixture
def unit_box_1d():
    return make_space("box", 1, lo=0.0, hi=1.0)


@pytest.fixture
def sym_box_2d():
    return make_space("box", 2, lo=-1.0, hi=1.0)


@pytest.fixture
def unit_ball_2d():
    return make_space("ball", 2, radius=1.0, center=0.0)


@pytest.fixture
def simplex_3d():
    return make_space("simplex", 3)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
