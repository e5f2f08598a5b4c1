import numpy as np
import pytest

from tensorcfo.channel import crandn


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def rand_tensor(rng):
    def make(*shape):
        return crandn(rng, *shape)
    return make


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
