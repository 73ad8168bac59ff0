import numpy as np
import pytest
from hypothesis import settings

from lvcoop.model import ProblemSpec

settings.register_profile("default", deadline=None, max_examples=25)
settings.load_profile("default")

ACCEPTANCE_LINES = []


@pytest.fixture
def lv_spec():
    """Dirichlet (0,1), a = 0, b = 1, c = 3."""
    return ProblemSpec.constant(0.0, 0.0, 1.0, 1.0, 3.0, 3.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
