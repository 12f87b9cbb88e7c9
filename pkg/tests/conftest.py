import numpy as np
import pytest

from qsteer.states import SystemSpec

CA_OMEGA = 4.5e15
CA_A = 2.2e8
CA_MU = 2.4e-29
CA_FIELD = 1e7


def ca_system(rate=CA_A):
    return SystemSpec([0.0, CA_OMEGA], [[0.0, rate], [0.0, 0.0]], [[0.0, CA_MU], [0.0, 0.0]])


def random_system(n, rng, a_low=1e-3):
    """Distinct random energies, A_ij uniform in (a_low, 1], unit dipoles."""
    energies = np.sort(rng.uniform(0.0, 10.0, size=n))
    einstein = np.triu(rng.uniform(a_low, 1.0, size=(n, n)), 1)
    dipole = np.triu(np.ones((n, n)), 1)
    return SystemSpec(energies, einstein, dipole)


def random_descending(n, rng, min_gap=1e-3):
    while True:
        p = np.sort(rng.dirichlet(np.ones(n)))[::-1]
        if np.all(-np.diff(p) > min_gap):
            return p


@pytest.fixture
def ca():
    return ca_system()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
