import pytest

from hbspectra import _backend


@pytest.fixture(params=_backend.available())
def backend(request):
    return request.param


def F(*rows):
    """Matrix shorthand: F([1, "1/2"], ...) -> RationalMatrix."""
    from hbspectra.matrixcore import RationalMatrix

    return RationalMatrix.from_rows(rows)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
