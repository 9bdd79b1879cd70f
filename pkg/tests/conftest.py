import os
import sys

import numpy as np
import pytest

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

os.environ.setdefault("REPORT_CACHE", "false")

from app.convex.bodies import Polytope, SmoothBody  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def square():
    return Polytope.from_vertices([[-1, -1], [1, -1], [1, 1], [-1, 1]])


@pytest.fixture
def shifted_square(square):
    return square.translate([-0.3, -0.1])


@pytest.fixture
def triangle():
    return Polytope.from_vertices([[0, 0], [1, 0], [0, 1]])


@pytest.fixture
def cube():
    return Polytope.from_vertices([[x, y, z] for x in (-1, 1) for y in (-1, 1) for z in (-1, 1)])


@pytest.fixture
def disc():
    return SmoothBody.ball(2)


@pytest.fixture
def ball3():
    return SmoothBody.ball(3)


@pytest.fixture
def ellipse12():
    return SmoothBody.ellipsoid(np.diag([1.0, 2.0]))
