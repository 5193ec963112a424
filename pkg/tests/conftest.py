import pytest

import acceptance_log


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    tag = getattr(getattr(item, "function", None), "criterion", None)
    if tag is None or report.when == "teardown":
        return
    number, title = tag
    if report.when == "call" or report.failed:
        acceptance_log.RESULTS[number] = (title, "PASS" if report.passed else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not acceptance_log.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(acceptance_log.RESULTS):
        title, status = acceptance_log.RESULTS[number]
        detail = "; ".join(acceptance_log.DETAILS.get(number, []))
        terminalreporter.write_line(f"{status} criterion {number} ({title}): {detail}")
