import pytest

from sopkit.analytic import clear_cache
from sopkit.channel import FadingSet, NetworkConfig


def _network(**overrides) -> NetworkConfig:
    data = dict(N=3, M=1, L_R=1, L_D=1, L_E=1, gbar_S=100.0, gbar_SJ=100.0, gbar_R=100.0,
                gbar_I=100.0, Rs=1.0)
    data.update(overrides)
    return NetworkConfig(**data)


def _tied(gbar_I: float, ratio: float = 0.1, **overrides) -> NetworkConfig:
    """Powers tied to gbar_I through sigma_i = delta = sigma_J = ratio."""
    gbar = gbar_I / ratio
    return _network(gbar_I=gbar_I, gbar_S=gbar, gbar_SJ=gbar, gbar_R=gbar, **overrides)


@pytest.fixture(scope="module")
def table1() -> FadingSet:
    return FadingSet.table1()


@pytest.fixture
def network():
    return _network


@pytest.fixture
def tied_network():
    return _tied


@pytest.fixture(autouse=True)
def _fresh_cache():
    clear_cache()
    yield
