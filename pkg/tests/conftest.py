"""Shared fixtures plus the acceptance-criteria summary printer."""
import pytest

_results: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line(
        "markers",
        "acceptance(criterion, title): ties a test to one numbered acceptance criterion",
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when != "call":
        return
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    criterion = marker.kwargs.get("criterion")
    entry = _results.setdefault(
        criterion, {"title": marker.kwargs.get("title", ""), "passed": True}
    )
    if not report.passed:
        entry["passed"] = False


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _results:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for criterion in sorted(_results):
        entry = _results[criterion]
        verdict = "PASS" if entry["passed"] else "FAIL"
        terminalreporter.write_line(f"criterion {criterion} ({entry['title']}): {verdict}")
