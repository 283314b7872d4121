import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from apollonian_k3.packings import resolve_case  # noqa: E402


@pytest.fixture(scope="session")
def circle():
    return resolve_case("circle")


@pytest.fixture(scope="session")
def sphere():
    return resolve_case("sphere")


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
