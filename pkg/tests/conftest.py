import sys
import numpy as np
import pytest

from hyperkin.ambient import euclidean
from hyperkin.surface import MotionSpec

BALLOON = ["t*cos(u)*sin(2*v)", "t*sin(u)*sin(2*v)", "2*t*sin(v)^2"]
CYLINDER = ["t*v", "t*sin(2*u/t)", "2*t*sin(u/t)^2"]


def motion(components, ambient=None, coords=("u", "v"), domain=None, **kw):
    n = len(coords) + 1
    return MotionSpec.from_strings(coords, components, ambient or euclidean(n),
                                   domain or [(0.0, 1.0)] * len(coords), **kw)


@pytest.fixture
def balloon():
    return motion(BALLOON, domain=[(0, 2 * np.pi), (0, np.pi / 2)])


@pytest.fixture
def cylinder():
    return motion(CYLINDER)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and getattr(mod, "LINES", None):
        terminalreporter.section("acceptance criteria")
        for line in mod.LINES:
            terminalreporter.write_line(line)
