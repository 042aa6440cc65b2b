import numpy as np
import pytest

from mrpart import LumaFrame


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def noise_frame(width, height, seed):
    return LumaFrame(np.random.default_rng(seed).integers(0, 256, size=(height, width), dtype=np.uint8))


# Criterion lines recorded by test_acceptance.py, echoed after the run.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
