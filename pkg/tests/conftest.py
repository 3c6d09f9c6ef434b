import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per acceptance criterion at the end of the run."""
    reports = []
    for status in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(status, []):
            if getattr(report, "when", "call") != "call":
                continue
            if "test_acceptance.py" in report.nodeid:
                reports.append((report.nodeid.split("::")[-1], status == "passed"))
    if not reports:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, ok in sorted(reports):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {name}")
