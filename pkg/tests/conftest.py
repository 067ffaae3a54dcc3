import numpy as np
import pytest

from multiree import OptimizerConfig

# Collected by test_acceptance; printed once at the end of the session.
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def fast_cfg():
    return OptimizerConfig(restarts=2)


@pytest.fixture
def rng():
    return np.random.default_rng(20260517)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
