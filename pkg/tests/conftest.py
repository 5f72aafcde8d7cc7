import pytest

_VERDICTS: list[tuple[int, str, bool, str]] = []


@pytest.fixture
def verdict():
    """Record one acceptance line: ``verdict(number, title, passed, detail)``."""

    def record(number, title, passed, detail=""):
        _VERDICTS.append((number, title, bool(passed), detail))
        print(f"criterion {number:2d} {'PASS' if passed else 'FAIL'}  {title}  {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(_VERDICTS):
        terminalreporter.write_line(f"criterion {number:2d} {'PASS' if passed else 'FAIL'}  {title}  {detail}")
