import numpy as np
import pytest

from apdaloc.motion import default_los_grid
from apdaloc.types import AmplitudeParams, NlosParams, make_anchors


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def nlos():
    return NlosParams()


@pytest.fixture
def amp():
    return AmplitudeParams()


@pytest.fixture
def grid():
    return default_los_grid()


@pytest.fixture
def anchors():
    return make_anchors([(-1.5, -0.6), (1.5, -0.6), (0.0, 1.2)])


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
