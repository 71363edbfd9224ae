import numpy as np
import pytest
from hypothesis import settings

from confsym.geometry import MetricData
from confsym.group import GroupContext
from confsym.odespace import DiagonalOperatorPath, InnerSpace, SolutionSpace
from confsym.septuple import constant_septuple, xrs_to_septuple
from confsym.specsolve import cubic_roots, invert_spec

_ACCEPTANCE_KEY = "confsym_acceptance_lines"

settings.register_profile("repro", derandomize=True, deadline=None)
settings.load_profile("repro")


@pytest.fixture(scope="session")
def acceptance_log(request):
    lines = []
    setattr(request.config, _ACCEPTANCE_KEY, lines)
    return lines


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, _ACCEPTANCE_KEY, None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def cubic56():
    return cubic_roots(5, 6)


@pytest.fixture(scope="session")
def inversion56(cubic56):
    return invert_spec(cubic56.roots, 1.0, 0.3, n=256)


@pytest.fixture(scope="session")
def septuple56(inversion56):
    return xrs_to_septuple(inversion56.xrs)


@pytest.fixture(scope="session")
def worked_septuple():
    return constant_septuple(2.0, 1.0, -3.0, 1.0)


class Build:
    def __init__(self, septuple, j, signs):
        self.septuple = septuple
        self.j = j
        self.path = DiagonalOperatorPath.from_blocks(septuple, j)
        self.inner = InnerSpace(np.ravel(signs))
        self.space = SolutionSpace(self.path)
        self.ctx = GroupContext(self.path, self.inner)
        self.metric = MetricData.from_path(self.path, self.inner)


@pytest.fixture(scope="session")
def build1(septuple56):
    return Build(septuple56, 1, [1, 1, 1])


@pytest.fixture(scope="session")
def build2(septuple56):
    return Build(septuple56, 2, [[1, 1, -1], [-1, 1, 1]])


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
