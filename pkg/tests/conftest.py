import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def assert_descent(trace, slack=1e-9):
    """Cost never rises across accepted moves and sweeps."""
    costs = [trace.initial_cost] + list(trace.move_costs)
    assert all(b <= a + slack for a, b in zip(costs, costs[1:]))
    sweeps = [trace.initial_cost] + list(trace.sweep_costs)
    assert all(b <= a + slack for a, b in zip(sweeps, sweeps[1:]))


@pytest.hookimpl(wrapper=True, tryfirst=True)
def pytest_runtest_makereport(item, call):
    rep = yield
    setattr(item, "rep_" + rep.when, rep)
    return rep
