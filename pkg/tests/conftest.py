import numpy as np
import pytest

from dcspin import Nucleus, SpinSystem, angular_from_khz, angular_from_mhz


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


@pytest.fixture
def carbon_system():
    """Weakly coupled 13C at 1 T with the shifted frequency at 2pi x 10.713 MHz."""
    a_x = angular_from_khz(13.42)
    a_z = angular_from_khz(17.09)
    gamma = angular_from_mhz(10.713) - 0.5 * a_z
    return SpinSystem(field_z=1.0, nuclei=(Nucleus(gamma, a_x, a_z, label="13C"),))


@pytest.fixture
def carbon_rabi():
    return angular_from_mhz(1.0)
