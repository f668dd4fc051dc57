import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from spiralkit import nufft, recon, trajgen

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def desk_traj():
    return trajgen.design_spiral(recon.desk_spec(23, 1.23))


@pytest.fixture(scope="session")
def desk_plan(desk_traj):
    return nufft.plan_create(desk_traj, recon.DESK_MATRIX)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def cartesian_coords(n):
    """Normalized coordinates of every grid frequency of an n x n image."""
    f = (np.arange(n) - n // 2) / n
    fx, fy = np.meshgrid(f, f, indexing="ij")
    return np.stack([fx.ravel(), fy.ravel()], axis=-1)


def crandn(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
