import sys

import numpy as np
import pytest

from banach_clt.measure import DiscreteMeasure


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_measure(rng, m):
    pts = np.cumsum(rng.uniform(0.1, 1.0, m)) - 0.5 * m * 0.55
    return DiscreteMeasure(pts, rng.uniform(0.1, 2.0, m))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(mod.RESULTS):
            terminalreporter.write_line(line)
