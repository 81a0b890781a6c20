import pytest

VERDICTS = []


def _record(ok, name, detail):
    VERDICTS.append(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")


@pytest.fixture
def record_verdict():
    return _record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
