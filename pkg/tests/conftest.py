import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from lpplab.env import RngSpec, make_grid, sample_brownian_lines


@pytest.fixture
def small_env():
    """Four Brownian lines on nine points, small enough for path enumeration."""
    return sample_brownian_lines(make_grid(0.0, 0.25, 9), 4, 1.3, RngSpec(2024, 7))


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: long-running acceptance criteria")


# one line per acceptance criterion, echoed at the end of the run
VERDICTS = {}


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for key in sorted(VERDICTS):
            terminalreporter.write_line(VERDICTS[key])
