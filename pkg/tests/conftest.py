import numpy as np
import pytest

from shorelake import elliptic
from shorelake.geometry import DepthProfile, ScalarField, build_grid, unit_disk


@pytest.fixture(scope="session")
def disk_profile():
    return DepthProfile(unit_disk(), 1.0)


@pytest.fixture(scope="session")
def grid16(disk_profile):
    return build_grid(disk_profile, 1.0 / 16)


@pytest.fixture(scope="session")
def grid32(disk_profile):
    return build_grid(disk_profile, 1.0 / 32)


@pytest.fixture(scope="session")
def solved32(disk_profile, grid32):
    """Manufactured solve on the disk, a=1: f = -8, Psi = (1-r^2)^2."""
    rhs = ScalarField.from_function(grid32, lambda x, y: np.full(x.shape, -8.0))
    problem = elliptic.WeightedPoissonProblem(grid32, disk_profile, rhs)
    return elliptic.solve(problem), problem
