import random

import pytest

from crookedmaps.continuum import interval_model
from crookedmaps.knaster import build_sn


@pytest.fixture
def interval():
    return interval_model()


@pytest.fixture
def s2_1():
    return build_sn(2, 1)


@pytest.fixture
def rng():
    return random.Random(20240611)
