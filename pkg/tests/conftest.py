import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from spinprobe.constants import MILLIGAUSS, NANOKELVIN
from spinprobe.cross_sections import SyntheticCrossSections
from spinprobe.trap import BathSpec, ProbeSpec

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def lab_bath(n_rb=7e3, T_nK=400.0):
    return BathSpec(n_rb, T_nK * NANOKELVIN, 2 * math.pi * 330.0, 2 * math.pi * 50.0)


@pytest.fixture
def bath():
    return lab_bath()


@pytest.fixture
def probe():
    return ProbeSpec(n_cs=1, initial_mF=2)


@pytest.fixture
def synthetic():
    return SyntheticCrossSections()


@pytest.fixture
def field10():
    return 10 * MILLIGAUSS


def random_distribution(rng, zeros=False):
    p = rng.dirichlet(np.full(7, 0.7))
    if zeros:
        p[rng.random(7) < 0.3] = 0.0
        if p.sum() == 0:
            p[0] = 1.0
        p = p / p.sum()
    return p


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
