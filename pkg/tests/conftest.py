import numpy as np
import pytest

from congestflow.grid import GridSpec, RobinSpec, ScalarField


@pytest.fixture
def grid2d():
    return GridSpec((64, 64), (1.0, 1.0))


@pytest.fixture
def grid1d():
    return GridSpec((256,), (1.0,))


@pytest.fixture
def disc_rho(grid2d):
    X, Y = grid2d.meshgrid()
    inside = (X - 0.5) ** 2 + (Y - 0.5) ** 2 < 0.25**2
    return ScalarField(grid2d, inside.astype(float))


@pytest.fixture
def smooth_rho(grid2d):
    X, Y = grid2d.meshgrid()
    vals = 0.5 + 0.45 * np.sin(2 * np.pi * X) * np.cos(np.pi * Y)
    return ScalarField(grid2d, np.clip(vals, 0.0, 1.0))


ROBIN_CASES = (RobinSpec(0.0, 1.0), RobinSpec(1.0, 0.0), RobinSpec(1.0, 1.0))
