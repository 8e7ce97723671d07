import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from crsf.graph import build_graph

settings.register_profile("crsf", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("crsf")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def triangle():
    return build_graph([(0, 1), (1, 2), (2, 0)])


@pytest.fixture
def square():
    return build_graph([(0, 1), (1, 2), (2, 3), (3, 0)])


@pytest.fixture
def square_chord():
    return build_graph([(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)])
