import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from flexsched import Instance  # noqa: E402

REF4_DURATIONS = (2, 3, 1, 1)
REF4_EDGES = ((0, 1), (0, 2), (1, 3), (2, 3))
REF4_NATIVE = "4 4\n0 2\n1 3\n2 1\n3 1\n0 1\n0 2\n1 3\n2 3"

# criterion id -> (status, detail); filled by test_acceptance.py
ACCEPTANCE: dict[str, tuple[str, str]] = {}


@pytest.fixture
def ref4():
    return Instance(REF4_DURATIONS, REF4_EDGES, name="REF4")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k[1:])):
        status, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{key} {status}: {detail}")
