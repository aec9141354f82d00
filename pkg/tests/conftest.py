import pytest

_LINES_KEY = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def criterion_report(request):
    """Callable recording one pass/fail line per acceptance criterion."""
    lines = request.config.stash.setdefault(_LINES_KEY, [])

    def record(number, name, passed, detail=""):
        line = f"criterion {number} [{'PASS' if passed else 'FAIL'}] {name}"
        if detail:
            line += f": {detail}"
        lines.append((number, line))
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES_KEY, None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(lines):
        terminalreporter.write_line(line)
