import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from driftclass.drifts import ZeroDrift, make_bump_drift
from driftclass.simulate import MixtureModel

settings.register_profile(
    "repo", max_examples=60, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")


@pytest.fixture
def bump_model():
    """Class 0: zero drift; class 1: bump of height 2 on [-1, 1]."""
    return MixtureModel(ZeroDrift(), make_bump_drift((-1.0, 1.0), 2.0), 0.5, 0.0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
