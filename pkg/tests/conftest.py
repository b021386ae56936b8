import math

import numpy as np
import pytest

from ultrafun.function_space import Domain, build_space


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def sine_pi():
    """Sine space on (0, pi) at level 8."""
    return build_space(Domain.interval(0.0, math.pi), "fourier_sine", 8)


@pytest.fixture
def periodic_2pi():
    return build_space(Domain.interval(0.0, 2 * math.pi, "periodic"), "fourier_periodic", 6)


@pytest.fixture
def hats_unit():
    return build_space(Domain.interval(0.0, 1.0), "pw_linear_hat", 8)


def random_points(rng, space, n):
    lo = np.array([a for a, _ in space.domain.bounds])
    hi = np.array([b for _, b in space.domain.bounds])
    pts = lo + (hi - lo) * rng.random((n, space.ndim))
    return pts[:, 0] if space.ndim == 1 else pts


# One line per acceptance criterion, filled in by test_acceptance.py and
# repeated in the terminal summary so the verdicts survive output capture.
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for key in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[key])
