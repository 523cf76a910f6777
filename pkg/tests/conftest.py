from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

DATA = Path(__file__).parent / "data"


@pytest.fixture
def ego4_prefix():
    return DATA / "ego4"


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def triangle():
    from explorecd.graph import HiddenNetwork
    return HiddenNetwork(3, [(0, 1), (1, 2), (0, 2)])
