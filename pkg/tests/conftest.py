import numpy as np
import pytest
from hypothesis import settings

from shearstab.fourier import kolmogorov, sin_plus_cos5

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


@pytest.fixture(scope="session")
def sin_profile():
    return kolmogorov()


@pytest.fixture(scope="session")
def fig1_profile():
    return sin_plus_cos5()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
