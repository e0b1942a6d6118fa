import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

# criterion number -> {test id: "passed" | "failed" | "skipped"}
_OUTCOMES = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_OUTCOMES] = {}


def pytest_collection_modifyitems(items):
    for item in items:
        marker = item.get_closest_marker("acceptance")
        if marker is not None:
            item.user_properties.append(("acceptance", marker.args[0]))


@pytest.hookimpl(tryfirst=True)
def pytest_report_teststatus(report, config):
    criterion = next((v for k, v in report.user_properties if k == "acceptance"), None)
    if criterion is None or not (report.when == "call" or report.outcome != "passed"):
        return None
    results = config.stash[_OUTCOMES].setdefault(criterion, {})
    if results.get(report.nodeid) != "failed":
        results[report.nodeid] = report.outcome
    return None


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash[_OUTCOMES]
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(results):
        statuses = set(results[criterion].values())
        if "failed" in statuses:
            verdict = "FAIL"
        elif statuses == {"skipped"}:
            verdict = "SKIP"
        else:
            verdict = "PASS"
        terminalreporter.write_line(f"criterion {criterion}: {verdict} ({len(results[criterion])} tests)")
