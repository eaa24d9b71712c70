from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")

import pytest


def pytest_configure(config):
    config._acceptance_lines = []


@pytest.fixture
def criterion_line(request):
    """Record one PASS/FAIL line for an acceptance criterion; all lines are repeated in the summary."""
    reporter = request.config.pluginmanager.get_plugin("terminalreporter")

    def emit(number: int, passed: bool, detail: str) -> None:
        line = f"CRITERION {number}: {'PASS' if passed else 'FAIL'} {detail}"
        request.config._acceptance_lines.append(line)
        if reporter is not None:
            reporter.write_line("")
            reporter.write_line(line)

    return emit


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
