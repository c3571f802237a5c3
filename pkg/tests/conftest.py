"""Per-criterion summary for the acceptance suite.

Tests marked ``@pytest.mark.criterion(n)`` are grouped by ``n``; the terminal
summary prints one PASS/FAIL line per criterion along with any ``detail``
properties the tests recorded.
"""

from collections import defaultdict

_outcomes = defaultdict(list)
_details = defaultdict(list)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_runtest_logreport(report):
    number = dict(report.user_properties).get("criterion")
    if number is None:
        return
    if report.when == "call" or report.outcome == "failed":
        _outcomes[number].append(report.outcome == "passed")
    if report.when == "call":
        _details[number].extend(v for k, v in report.user_properties if k == "detail")


def pytest_runtest_setup(item):
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        item.user_properties.append(("criterion", marker.args[0]))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_outcomes):
        status = "PASS" if all(_outcomes[number]) else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {status}")
        for detail in _details[number]:
            terminalreporter.write_line(f"    {detail}")
