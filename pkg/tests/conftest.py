import numpy as np
import pytest

from tdho.classical import Scenario
from tdho.ode import IntegratorConfig

TIGHT = IntegratorConfig(method="rk45", rtol=1e-10, atol=1e-10)

# omega^2, F for the five drift-test scenarios of the built-in library
LIBRARY = {
    "constant": ("1", "0"),
    "driven-constant": ("1", "1"),
    "chirp": ("1 + 0.1*t", "0"),
    "driven-chirp": ("1 + 0.1*t", "sin(t)"),
    "pulse": ("1", "exp(-(t-5)^2)"),
}


def make_scenario(omega_sq="1", force="0", t1=20.0, samples=2001):
    return Scenario.from_strings(omega_sq, force, t0=0.0, t1=t1, samples=samples)


@pytest.fixture
def cfg():
    return TIGHT


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
