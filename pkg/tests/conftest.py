import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from gpisx.geometry import Aabb3
from gpisx.scene import CameraSpec, GroundTruthScene, ScenePrimitive

settings.register_profile(
    "gpisx", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("gpisx")

TABLE = Aabb3([-0.35, -0.3, -0.25], [0.35, 0.3, 0.35])


@pytest.fixture
def table_bounds():
    return TABLE


@pytest.fixture
def plane_scene():
    return GroundTruthScene([ScenePrimitive("base_plane", [0, 0, 0])], TABLE, seed=3)


@pytest.fixture
def small_camera():
    """Quarter-resolution camera; keeps clouds around 1000-1500 points."""
    return CameraSpec(resolution=(80, 60))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
