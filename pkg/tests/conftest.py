import numpy as np
import pytest

from s2oct.core import Dataset, build_topology
from s2oct.solve import SolverConfig

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def record_criterion():
    def record(name: str, passed: bool, detail: str = ""):
        ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def exact_config():
    return SolverConfig(time_limit_seconds=60, mip_gap=0.0)


@pytest.fixture
def small_dataset():
    rng = np.random.default_rng(0)
    return Dataset(rng.random((4, 2)), ["A", "B", "A", "B"], rng.random((6, 2)))


@pytest.fixture
def depth2():
    return build_topology(2)
