import math

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def reference_geometry_kwargs():
    """Link parameters shared by every figure scenario."""
    return dict(
        z=5000.0,
        a_gs=0.1,
        a_re=0.05,
        visibility=10_000.0,
        rho_refl=0.5,
        p_gs=1.0,
        p_th=1e-8,
        wavelength=1550e-9,
    )


def rel(a, b):
    return abs(a - b) / abs(b)


SQRT2 = math.sqrt(2.0)


_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_log():
    """Collects one PASS/FAIL line per acceptance criterion."""
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
