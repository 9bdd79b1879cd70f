"""Seeded random bodies and maps for the property suites."""

from typing import Tuple

import numpy as np

from app.common.errors import DegenerateBody
from app.common.linalg import normalize_rows
from app.convex.bodies import Polytope, SmoothBody


def random_polytope(rng: np.random.Generator, dim: int, margin: float = 0.25) -> Polytope:
    """Hull of a few jittered sphere points; the origin is interior with at least ``margin`` to spare."""
    low, high = (4, 9) if dim == 2 else (6, 13)
    for _ in range(100):
        count = int(rng.integers(low, high))
        points = normalize_rows(rng.normal(size=(count, dim))) * rng.uniform(0.7, 1.3, size=(count, 1))
        points = points + rng.uniform(-0.15, 0.15, size=dim)
        try:
            P = Polytope.from_vertices(points)
        except DegenerateBody:
            continue
        if P.interior_margin(np.zeros(dim)) >= margin:
            return P
    raise DegenerateBody("could not draw a polytope with the origin well inside")


def random_linear_map(rng: np.random.Generator, dim: int, spread: Tuple[float, float] = (0.5, 2.0)) -> np.ndarray:
    """U diag(s) V^T with orthogonal U, V and singular values s drawn from ``spread``."""
    U, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
    V, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
    s = rng.uniform(spread[0], spread[1], size=dim)
    return U @ np.diag(s) @ V.T


def random_ellipsoid(rng: np.random.Generator, dim: int) -> SmoothBody:
    """Centered ellipsoid with semi-axes in [0.6, 1.6]."""
    R, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
    axes = rng.uniform(0.6, 1.6, size=dim)
    return SmoothBody.ellipsoid(R @ np.diag(axes ** -2.0) @ R.T)


def random_smooth(rng: np.random.Generator, dim: int) -> SmoothBody:
    """Alternates between centered ellipsoids and small quartic perturbations of the ball."""
    if rng.uniform() < 0.5:
        return random_ellipsoid(rng, dim)
    return SmoothBody.perturbed_ball(dim, float(rng.uniform(0.01, 0.05)), quartic=rng.uniform(0.0, 1.0, size=dim))
