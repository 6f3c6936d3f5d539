import numpy as np
import pytest

from phdisc.discrete_ops import Grid1D, StaggeredGrid2D


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture
def grid1d():
    return Grid1D(0.0, 1.0, 16)


@pytest.fixture
def grid2d():
    return StaggeredGrid2D(1.0, 1.0, 6, 6)


@pytest.fixture
def grid2d_rect():
    return StaggeredGrid2D(1.0, 1.4, 7, 5)
