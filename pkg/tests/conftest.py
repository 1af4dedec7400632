import pytest

from ahsp.groups import GroupSpec

CRITERIA: list[str] = []

EXTRA_GROUPS = (GroupSpec((8, 9)), GroupSpec((4, 3, 25)))


@pytest.fixture(scope="session")
def report_line():
    """Record one PASS/FAIL line for the terminal summary."""

    def record(number: int, ok: bool, text: str) -> None:
        line = f"[criterion {number:2d}] {'PASS' if ok else 'FAIL'} {text}"
        print(line)
        CRITERIA.append(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(CRITERIA):
            terminalreporter.write_line(line)
