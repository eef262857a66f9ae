"""
Shared fixtures: settings isolation, standard measurements and channels.
"""

import numpy as np
import pytest

from channel_steering import channels
from channel_steering.linalg import max_entangled
from channel_steering.settings import reset_settings
from channel_steering.steering import induced_state_assemblage, pauli_measurements

SQRT2_MINUS_1 = np.sqrt(2) - 1


@pytest.fixture(autouse=True)
def default_settings():
    reset_settings()
    yield
    reset_settings()


@pytest.fixture
def xz():
    return pauli_measurements("xz")


@pytest.fixture
def psi_plus_assemblage(xz):
    """Maximally entangled qubits steered by X and Z."""
    return induced_state_assemblage(max_entangled(2), (2, 2), 0, xz)


@pytest.fixture
def dephasing_dilation():
    return channels.extension_from_isometry(
        channels.stinespring_from_kraus(channels.dephasing_kraus(0.5))
    )


@pytest.fixture
def fixed_output():
    return channels.fixed_output_extension(np.diag([0.75, 0.25]))


@pytest.fixture
def pointer(rng):
    return channels.pointer_extension(channels.random_instrument(2, 2, members=3, seed=rng))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
