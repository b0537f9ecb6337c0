import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from aoipower.channel import ChannelModel  # noqa: E402

ACCEPTANCE_LINES = []


@pytest.fixture
def ideal_channel():
    """Channel whose gain is always infinite: every powered slot decodes."""
    return ChannelModel(
        "ideal",
        cdf=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        inverse_cdf=lambda u: np.full_like(np.asarray(u, dtype=float), math.inf),
        mean=math.inf,
    )


@pytest.fixture
def report_line():
    def record(criterion, passed, detail):
        ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] criterion {criterion}: {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
