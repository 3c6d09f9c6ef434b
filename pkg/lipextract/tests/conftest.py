import pytest

from lipextract import synthclip


@pytest.fixture(scope="session")
def face_clip(tmp_path_factory):
    """Bundled 2-second synthetic talking-face clip, 50 fps MJPG."""
    path = tmp_path_factory.mktemp("clips") / "face.avi"
    frames = synthclip.write_clip(path, duration_s=2.0, fps=50.0)
    assert frames == 100
    return str(path)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
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
