import pytest

from attrition import GameParams

# acceptance results, filled by tests/test_acceptance.py and printed after the run
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def base():
    return GameParams(1.0, 0.7)


@pytest.fixture
def uneven():
    """r=1, alpha=0.7 with the AC pie twice the BC pie."""
    return GameParams(1.0, 0.7, 2.0, 1.0)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
