import os

from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


_ACCEPTANCE_LINES: list[str] = []


def pytest_runtest_logreport(report):
    if report.when == "call":
        _ACCEPTANCE_LINES.extend(v for k, v in report.user_properties if k == "line")


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda l: int(l.split("]")[1].split(".")[0])):
            terminalreporter.write_line(line)
