import numpy as np
import pytest

from hamlearn.graph import build_graph, full_graph


@pytest.fixture
def path_graph():
    return build_graph(3, 1, [(1, 2), (2, 3)], [3])


@pytest.fixture
def five_neuron_graph():
    return full_graph(5, 1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
