import numpy as np
import pytest

from mzlab.grid import GridSpec


@pytest.fixture(scope="session")
def grid256():
    return GridSpec(2, 8.0, 256)


@pytest.fixture(scope="session")
def grid128():
    return GridSpec(2, 8.0, 128)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    # one PASS/FAIL line per acceptance criterion, collected from user_properties
    lines = []
    for key in ("passed", "failed"):
        for rep in terminalreporter.stats.get(key, []):
            if getattr(rep, "when", "call") != "call":
                continue
            lines += [v for k, v in getattr(rep, "user_properties", []) if k == "acceptance"]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
