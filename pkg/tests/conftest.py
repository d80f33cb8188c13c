import random

import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture
def rng():
    return random.Random(20240517)


@pytest.fixture
def acceptance_log(request):
    log = getattr(request.config, "_acceptance_log", None)
    if log is None:
        log = request.config._acceptance_log = {}
    return log


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = getattr(config, "_acceptance_log", None)
    if not log:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(log):
        ok, detail = log[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")
