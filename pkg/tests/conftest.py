import numpy as np
import pytest

from leakagesim.config import default_config, load_config
from leakagesim.simulate import simulate
from leakagesim.textgen import default_language_model, make_topics


@pytest.fixture(scope="session")
def config():
    return default_config()


@pytest.fixture(scope="session")
def lm():
    return default_language_model()


@pytest.fixture(scope="session")
def topics(config, lm):
    return make_topics(config, lm)


@pytest.fixture(scope="session")
def small_units():
    """A 400-unit simulated corpus at seed 42."""
    return simulate(load_config(overrides={"n": 400}))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
