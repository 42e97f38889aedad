from __future__ import annotations

import pytest

_criteria: dict[str, list[tuple[str, str]]] = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    label = report.user_properties and dict(report.user_properties).get("criterion")
    if label:
        _criteria.setdefault(label, []).append((report.nodeid.split("::")[-1], report.outcome))


@pytest.fixture(autouse=True)
def _criterion_label(request):
    marker = request.node.get_closest_marker("criterion")
    if marker:
        request.node.user_properties.append(("criterion", marker.args[0]))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_criteria, key=lambda s: int(s.split()[0])):
        checks = _criteria[label]
        failed = [name for name, outcome in checks if outcome != "passed"]
        status = "FAIL" if failed else "PASS"
        terminalreporter.write_line(f"{status}  {label}  ({len(checks) - len(failed)}/{len(checks)} checks)")
        for name in failed:
            terminalreporter.write_line(f"        failed: {name}")
