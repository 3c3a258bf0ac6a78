import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from edgecurves.synthdata import FIXTURE_SPECS, fixture_suite, scene_name

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def suite():
    """The 20 seed-pinned fixture scenes, generated once per session."""
    return list(zip([scene_name(s) for s in FIXTURE_SPECS], fixture_suite()))


@pytest.fixture(scope="session")
def box_scene(suite):
    return suite[0][1]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
