import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from mixsky.qstate import ModeGrid
from mixsky.synth import analytic_modes_q1

settings.register_profile("default", max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def modes11():
    return analytic_modes_q1(ModeGrid(11), -1)


@pytest.fixture(scope="session")
def modes80():
    return analytic_modes_q1(ModeGrid(80), -1)


def random_unitary(D, rng):
    z = rng.normal(size=(D, D)) + 1j * rng.normal(size=(D, D))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def spherical_excess(a, b, c):
    """Signed solid angle of a spherical triangle via L'Huilier's theorem."""
    def side(u, v):
        return math.acos(max(-1.0, min(1.0, float(np.dot(u, v)))))

    x, y, z = side(b, c), side(c, a), side(a, b)
    s = (x + y + z) / 2
    t = math.tan(s / 2) * math.tan((s - x) / 2) * math.tan((s - y) / 2) * math.tan((s - z) / 2)
    excess = 4 * math.atan(math.sqrt(max(t, 0.0)))
    return math.copysign(excess, float(np.dot(a, np.cross(b, c))))


def naive_lattice_charge(s):
    """Loop-based solid-angle charge in the (x', x) orientation used by the package."""
    total = 0.0
    M = s.shape[0]
    for i in range(M - 1):
        for j in range(M - 1):
            a, b, c, d = s[i, j], s[i + 1, j], s[i + 1, j + 1], s[i, j + 1]
            total += spherical_excess(a, b, c) + spherical_excess(a, c, d)
    return -total / (4 * math.pi)
