import math

import numpy as np
import pytest
from hypothesis import settings

# deterministic property-test generation: the suite's outcome must not
# depend on hypothesis's run-to-run exploration
settings.register_profile("deterministic", derandomize=True, deadline=None)
settings.load_profile("deterministic")


def make_rng(seed):
    """Counter-based seedable generator used throughout the tests."""
    return np.random.Generator(np.random.Philox(seed))


def poisson_disc(rng, intensity, radius, center=(0.0, 0.0), min_points=0):
    """Poisson cloud of the given intensity in a disc, conditioned on a
    minimum point count."""
    area = math.pi * radius * radius
    while True:
        n = rng.poisson(intensity * area)
        if n >= min_points:
            break
    r = radius * np.sqrt(rng.random(n))
    th = 2.0 * math.pi * rng.random(n)
    return [(center[0] + ri * math.cos(ti), center[1] + ri * math.sin(ti))
            for ri, ti in zip(r, th)]


@pytest.fixture
def rng():
    return make_rng(0)
