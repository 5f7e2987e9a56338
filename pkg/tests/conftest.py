import sys
from pathlib import Path

import pytest

TESTS = Path(__file__).resolve().parent
sys.path.insert(0, str(TESTS))

ACCEPTANCE_LINES: dict[str, str] = {}


@pytest.fixture
def data_dir():
    return TESTS / "data"


@pytest.fixture
def record_criterion():
    def record(key: str, passed: bool, detail: str):
        ACCEPTANCE_LINES[key] = f"{key} {'PASS' if passed else 'FAIL'}  {detail}"
        print(ACCEPTANCE_LINES[key])
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda k: int(k[1:])):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
