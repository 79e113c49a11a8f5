import math

import numpy as np
import pytest

from billiards.manifold import (
    Circle,
    Ellipse,
    Ellipsoid,
    PerturbedCircle,
    PerturbedSphere,
    Sphere,
)

CATALOG = {
    "circle": lambda: Circle(1.3),
    "perturbed_circle": lambda: PerturbedCircle(0.1, 3),
    "ellipse": lambda: Ellipse(1.5, 0.7),
    "sphere": lambda: Sphere(2),
    "sphere3": lambda: Sphere(3, radius=0.8),
    "ellipsoid": lambda: Ellipsoid([1.0, 1.1, 1.2]),
    "perturbed_sphere": lambda: PerturbedSphere(2, 0.1),
}


@pytest.fixture(params=sorted(CATALOG))
def manifold(request):
    return CATALOG[request.param]()


def random_chart_points(M, n, rng, margin=0.05):
    """Chart-0 points staying ``margin`` away from chart singularities."""
    u = M.sample(rng.random((n, M.intrinsic_dim)))
    if M.intrinsic_dim > 1:
        u[:, :-1] = np.clip(u[:, :-1], margin, math.pi - margin)
    return u


def regular_polygon(M, p, winding=1, phase=0.0):
    from billiards.core import Configuration

    angles = phase + 2 * math.pi * winding * np.arange(p) / p
    return Configuration.from_coords(M, angles)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
