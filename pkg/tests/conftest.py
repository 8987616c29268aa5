import pytest

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line for an acceptance criterion.

    Usage: ``criterion("3", "detail text", ok)``; the line is printed in the
    terminal summary whether or not the test itself fails.
    """

    def record(label: str, detail: str, ok: bool) -> None:
        ACCEPTANCE_LINES.append(f"criterion {label}: {'PASS' if ok else 'FAIL'}  {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
