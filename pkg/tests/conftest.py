"""Shared pytest hooks: collects acceptance-criterion results and prints a
one-line PASS/FAIL verdict per criterion at the end of the run."""

ACCEPTANCE_RESULTS = []


def record_criterion(name: str, ok: bool, detail: str = ""):
    ACCEPTANCE_RESULTS.append((name, bool(ok), detail))
    assert ok, f"acceptance criterion failed: {name} {detail}"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_line("")
    terminalreporter.write_line("acceptance criteria:")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        verdict = "PASS" if ok else "FAIL"
        suffix = f" ({detail})" if detail else ""
        terminalreporter.write_line(f"  [{verdict}] {name}{suffix}")
