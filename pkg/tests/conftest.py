import functools

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from artifact import rfa
from artifact import state_sum as ss
from artifact import yang_mills as ym

settings.register_profile(
    "artifact",
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("artifact")


@functools.lru_cache(maxsize=None)
def group(name):
    return ym.builtin_group(name)


@functools.lru_cache(maxsize=None)
def block(name, trunc=None):
    return group(name).block_rfa(trunc)


@functools.lru_cache(maxsize=None)
def data(name, trunc=None):
    return ss.RfaData(block(name, trunc))


@functools.lru_cache(maxsize=None)
def spectral_models():
    return {
        "spectral": rfa.SpectralRFA([(1.0, 0.0), (2.0, 0.5), (0.5 + 0.5j, 1.25)]),
        "example": rfa.SpectralRFA([(2.0, 0.3), (0.7, 1.0)], convention="example"),
    }


@functools.lru_cache(maxsize=None)
def all_models():
    """Every built-in strongly separable model, keyed by a short name."""
    out = {
        "z2": block("cyclic:2"),
        "z3": block("cyclic:3"),
        "s3": block("s3"),
        "su2_3": block("su2", 3),
        "f3": rfa.nonhermitian_example(3),
    }
    out.update(spectral_models())
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
