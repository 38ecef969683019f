import numpy as np
import pytest

from diowave.clusters import build_partition
from diowave.lattice import DispersionMatrix
from diowave.resonance import build_quasi_resonant_index

ACCEPTANCE_LINES: dict[int, str] = {}


def record_acceptance(number: int, passed: bool, detail: str):
    line = f"ACCEPTANCE {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


@pytest.fixture(scope="session")
def golden():
    return DispersionMatrix.golden()


@pytest.fixture(scope="session")
def identity2():
    return DispersionMatrix.identity(2)


@pytest.fixture(scope="session")
def golden_partition_8(golden):
    return build_partition(golden, 8)


@pytest.fixture(scope="session")
def golden_index_8(golden_partition_8):
    return build_quasi_resonant_index(golden_partition_8, theta=0.3, alpha0_constant=4.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
