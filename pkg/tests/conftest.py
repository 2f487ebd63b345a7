import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from qheat import AffineFn, CoefficientProfile, ConstantFn, QParams

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

Q_VALUES = (0.3, 0.5, 0.9)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=Q_VALUES, ids=lambda q: f"q={q}")
def qp(request):
    return QParams(request.param)


@pytest.fixture
def unit_profile():
    return CoefficientProfile(ConstantFn(1.0), 1.0, 1.0)


@pytest.fixture
def affine_profile():
    return CoefficientProfile(AffineFn(2.0, -0.5), 1.5, 2.0)
