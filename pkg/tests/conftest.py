import math

import pytest

from dilute_bose import soft_sphere


@pytest.fixture(scope="session")
def sphere():
    return soft_sphere(2.0, 1.0)


@pytest.fixture(scope="session")
def sphere_a():
    # analytic: sinh interior matched to r - a outside, k0 = 1
    return 1.0 - math.tanh(1.0)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance") or __import__("sys").modules.get("tests.test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.line(n))
