import numpy as np
import pytest

from steersep.sampling import RandomStream, ginibre_block, paper_feasible_block

CRITERIA = []


def record_criterion(number, passed, detail):
    line = f"criterion {number:>3}: {'PASS' if passed else 'FAIL'}  {detail}"
    CRITERIA.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in CRITERIA:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def ginibre_states():
    return ginibre_block(RandomStream(2024, 0), 10_000).states


@pytest.fixture(scope="session")
def paper_states():
    stream = RandomStream(2024, 1)
    found, have = [], 0
    while have < 1_000:
        _, mats = paper_feasible_block(stream, 1 << 20, 4 / 15)
        found.append(mats)
        have += len(mats)
    return np.concatenate(found)[:1_000]
