import os

import pytest
from hypothesis import HealthCheck, settings

from helpers import MiniKernel

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def mini_kernel():
    return MiniKernel


# ------------------------------------------------------ acceptance reporting

ACCEPTANCE_RESULTS = {}


def record_criterion(number, title, passed, detail=""):
    ACCEPTANCE_RESULTS[number] = (title, passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_RESULTS):
        title, passed, detail = ACCEPTANCE_RESULTS[n]
        mark = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {n:2d} {mark}  {title}: {detail}")
