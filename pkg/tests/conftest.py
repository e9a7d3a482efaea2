import numpy as np
import pytest

from qtraj import models


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def thermal_ho():
    return models.damped_ho(models.HOParams(omega=1.0, gamma=1.0, nbar=0.2, dim=12))


@pytest.fixture
def forced_ho():
    return models.damped_ho(models.HOParams(omega=1.0, gamma=1.0, nbar=0.2, force=2.0, dim=16))


# one line per acceptance criterion, repeated at the end of the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
