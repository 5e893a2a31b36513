import numpy as np
import pytest

from vibrohinf.harness import fast_tables
from vibrohinf.hinf import example_plant
from vibrohinf.vibration import SystemSpec, transform_system

# Lines recorded by the acceptance tests, printed in the terminal summary.
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def example_avg():
    """Example plant, off-diagonal K with k = 0.5, gamma = 3."""
    return transform_system(example_plant(0.5, 3.0), 128)


@pytest.fixture(scope="session")
def example_tables(example_avg):
    return fast_tables(example_avg)


@pytest.fixture(scope="session")
def reference_cache():
    """Shooting results keyed by eps, shared across orders and tests."""
    return {}


@pytest.fixture(scope="session")
def scalar_spec():
    return SystemSpec(A=[[-1.0]], B1=[[1.0]], B2=[[1.0]], L=[[1.0]], gamma=1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
