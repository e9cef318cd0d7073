import re

_CRITERION = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)")


def pytest_terminal_summary(terminalreporter):
    rows = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            match = _CRITERION.search(getattr(rep, "nodeid", ""))
            if match and rep.when == "call":
                rows.append((int(match.group(1)), match.group(2), "PASS" if outcome == "passed" else "FAIL"))
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for num, name, status in sorted(rows):
        terminalreporter.write_line(f"criterion {num} ({name.replace('_', ' ')}): {status}")
