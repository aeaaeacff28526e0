import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=50, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

# (criterion number, title, passed, detail) recorded by test_acceptance.py
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(ACCEPTANCE_LINES, key=lambda r: r[0]):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {number:>2}: {title}: {detail}")


@pytest.fixture
def acceptance():
    def record(number, title, passed, detail=""):
        ACCEPTANCE_LINES.append((number, title, bool(passed), detail))
        print(f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {title}: {detail}")
        return passed

    return record
