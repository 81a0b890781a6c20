"""Shared pytest plumbing: collects acceptance verdict lines and prints
them in the terminal summary, where output capture cannot swallow them."""

ACCEPTANCE_LINES = []


def record_verdict(ok: bool, name: str, detail: str) -> None:
    word = "PASS" if ok else "FAIL"
    ACCEPTANCE_LINES.append(f"[{word}] {name}: {detail}")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
