import numpy as np
import pytest

from nvwave.eulerian import from_primitives
from nvwave.scenario import bundled
from nvwave.wavespeed import ConstantSpeed, SmoothSpeed

# acceptance lines collected by test_acceptance and repeated in the summary
ACCEPTANCE = []


@pytest.fixture(scope="session")
def model():
    return SmoothSpeed(1.0, 1.0)


@pytest.fixture(scope="session")
def unit_speed():
    return ConstantSpeed(1.0)


def gaussian_state(model, n=128, amp=0.4, width=1.0, L=4.0, ut_amp=0.0):
    g = np.linspace(-L, L, n + 1)
    u = amp * np.exp(-(g / width) ** 2)
    ux = -2 * g / width ** 2 * u
    ut = ut_amp * np.exp(-(g / width) ** 2)
    return from_primitives(g, u, ut, ux, 0 * g, 0 * g, model)


@pytest.fixture(scope="session")
def bump_state(model):
    return gaussian_state(model, 128)


@pytest.fixture(scope="session")
def smooth_bump():
    return bundled("smooth_bump")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
