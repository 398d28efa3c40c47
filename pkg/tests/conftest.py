from contextlib import contextmanager

import pytest

_CRITERIA = {}


@pytest.fixture
def criterion():
    """Context manager recording PASS/FAIL for a numbered acceptance criterion."""

    @contextmanager
    def record(number, title):
        _CRITERIA[number] = (title, "FAIL")
        yield
        _CRITERIA[number] = (title, "PASS")

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, status = _CRITERIA[number]
        terminalreporter.write_line(f"{status} criterion {number:>2}: {title}")
