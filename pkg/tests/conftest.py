import pytest

from symmorse.potentials import MorseParams


@pytest.fixture(scope="session")
def dw_params():
    """d=1, alpha=1, gamma1=gamma2=1.8, the reference double well."""
    return MorseParams.symmetric(1.0, 1.8, 1.0)


@pytest.fixture(scope="session")
def unit_morse():
    return MorseParams(1.0, 1.0, 1.0)
