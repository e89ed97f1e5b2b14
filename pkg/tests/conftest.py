import numpy as np
import pytest
from hypothesis import settings

from tmoment.core import IndexSet, MomentSpec, ProblemInstance, ReferenceWeight, SupportRegion

settings.register_profile("default", deadline=None)
settings.load_profile("default")


def one_d(g, support="full", weight=None):
    """A 1-D instance on I = {0..2k} with the default weight exp(-t^2k)."""
    g = np.asarray(g, dtype=float)
    idx = IndexSet.full(1, (len(g) - 1) // 2)
    T = SupportRegion.full(1) if support == "full" else SupportRegion.orthant(1)
    return ProblemInstance(idx, MomentSpec(idx, g), T, weight or ReferenceWeight.norm_power())


@pytest.fixture
def gaussian():
    return one_d([1.0, 0.0, 1.0])


@pytest.fixture
def dirac():
    return one_d([1.0, 0.0, 0.0])


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
