import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("repo", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "repo"))

# Filled by tests/test_acceptance.py: criterion number -> formatted line.
CRITERION_LINES: dict = {}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not CRITERION_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(CRITERION_LINES):
        terminalreporter.write_line(CRITERION_LINES[k])


@pytest.fixture(scope="session")
def criterion_lines():
    return CRITERION_LINES
