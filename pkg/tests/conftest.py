import numpy as np
import pytest

from netscatter.network import NetworkParams, sample_random


@pytest.fixture
def fig1_params():
    return NetworkParams(8, onsite_energy=0.0, direct_coupling=1.0, bulk_scale=1.0, link_scale=1.0)


@pytest.fixture
def fig1_network(fig1_params):
    return sample_random(fig1_params, 7)


def random_symmetric(rng, n, scale=1.0):
    a = rng.normal(size=(n, n)) * scale
    return 0.5 * (a + a.T)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
