import os

from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    max_examples=60,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

import pytest  # noqa: E402

_CRITERIA = {}


@pytest.fixture(scope="session")
def criterion_report():
    """Record and print one pass/fail line per acceptance criterion."""
    def report(num, title, passed, detail):
        line = "C%-2d %s  %s: %s" % (num, "PASS" if passed else "FAIL", title, detail)
        _CRITERIA[num] = line
        print(line)
        return passed

    return report


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for num in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[num])
