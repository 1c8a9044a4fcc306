import numpy as np
import pytest
from hypothesis import settings, HealthCheck

from ratdyn.ratmap import RationalMap
from ratdyn.repro import example_maps

settings.register_profile("ratdyn", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ratdyn")

VARS = ["t", "z", "w"]


def mk(*components, variables=VARS):
    return RationalMap.from_strings(list(components), list(variables))


@pytest.fixture(scope="session")
def maps():
    out = dict(example_maps())
    out["z2"] = mk("t^2", "z^2", variables=["t", "z"])
    out["dense"] = mk("t*z+w^2", "z*w", "t*w+z^2")
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
