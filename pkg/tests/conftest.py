import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oracle import random_instance_arrays  # noqa: E402

from tsptw_transfer import Instance  # noqa: E402


@pytest.fixture
def make_instance():
    def make(n, seed=0, **kw):
        d, a, b, tour = random_instance_arrays(np.random.default_rng(seed), n, **kw)
        return Instance(d, a, b, name=f"t{n}_{seed}"), tour

    return make


@pytest.fixture
def two_city():
    def make(b1=100.0, a1=0.0):
        d = np.array([[0.0, 5.0], [5.0, 0.0]])
        return Instance(d, [0.0, a1], [100.0, b1])

    return make


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    if acceptance is None or not acceptance.OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for line in acceptance.summary_lines():
        terminalreporter.write_line(line)
