import time

import numpy as np
import pytest

from barrier_pairs import DoubleSpringMass, InvertedPendulum, SynthesisConfig, synthesize_bank

ACCEPTANCE_LINES = {}


def record_criterion(number, passed, detail):
    """Store and print one acceptance line; the terminal summary repeats all of them."""
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])


@pytest.fixture(scope="session")
def pendulum():
    return InvertedPendulum()


@pytest.fixture(scope="session")
def springmass():
    return DoubleSpringMass()


@pytest.fixture(scope="session")
def pendulum_bank_timed(pendulum):
    start = time.perf_counter()
    bank = synthesize_bank(pendulum, pendulum.equilibrium_grid(), SynthesisConfig())
    return bank, time.perf_counter() - start


@pytest.fixture(scope="session")
def pendulum_bank(pendulum_bank_timed):
    return pendulum_bank_timed[0]


@pytest.fixture(scope="session")
def springmass_bank(springmass):
    return synthesize_bank(springmass, springmass.equilibrium_grid(), SynthesisConfig())


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
