import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

from quadlienard import QuadraticSystem  # noqa: E402

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def two_foci(eps: float = 0.0) -> QuadraticSystem:
    """Quadratic system with weak foci at x = 0 and x = -2 when eps = 0."""
    return QuadraticSystem(a1=0.0, b1=1.0, c1=0.0, alpha1=1 / 3 - eps, beta1=1.0,
                           a2=0.0, b2=-1.0, c2=1.0, alpha2=-1 / 3, beta2=-1 / 3)


ATTRACTOR = QuadraticSystem(a1=0.0, b1=1.0, c1=0.0, alpha1=-1.0, beta1=1.0,
                            a2=-1.0, b2=-1.0, c2=0.25, alpha2=-1000.0, beta2=2.0)


@pytest.fixture
def attractor():
    return ATTRACTOR


def pytest_terminal_summary(terminalreporter):
    try:
        import test_acceptance
    except ImportError:
        return
    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(test_acceptance.RESULTS):
            terminalreporter.write_line(test_acceptance.RESULTS[n])
