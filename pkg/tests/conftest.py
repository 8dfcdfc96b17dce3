import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def laplace_mixture(rng, size, ties=False):
    loc = rng.choice([-1.0, 1.5], size=size)
    v = rng.laplace(loc, rng.uniform(0.3, 2.0))
    return np.round(v, 1) if ties else v


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
