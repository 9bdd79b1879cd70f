"""Quadrature on the unit circle and the unit 2-sphere.

The circle rule is the uniform trapezoid rule (spectrally accurate for
smooth periodic integrands). The sphere rule uses the vertices of a
subdivided icosahedron, weighted by the areas of their spherical Voronoi
cells, so the weights sum to 4*pi.
"""

from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
from scipy.spatial import ConvexHull, SphericalVoronoi

from app.common.errors import InvalidConfig, WrongDimension
from app.settings import S


def circle_nodes(count: int) -> Tuple[np.ndarray, np.ndarray]:
    """Uniform nodes on S^1 (angle 0 first) with equal weights 2*pi/count."""
    if count < 3:
        raise InvalidConfig(f"circle quadrature needs at least 3 nodes (got {count})")
    return _circle_nodes(int(count))


@lru_cache(maxsize=16)
def _circle_nodes(count: int) -> Tuple[np.ndarray, np.ndarray]:
    theta = 2.0 * np.pi * np.arange(count) / count
    nodes = np.column_stack([np.cos(theta), np.sin(theta)])
    weights = np.full(count, 2.0 * np.pi / count)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def _icosahedron() -> np.ndarray:
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    pts = []
    for a in (-1.0, 1.0):
        for b in (-phi, phi):
            pts.append((0.0, a, b))
            pts.append((a, b, 0.0))
            pts.append((b, 0.0, a))
    u = np.array(pts)
    return u / np.linalg.norm(u, axis=1, keepdims=True)


def icosphere_nodes(level: int) -> Tuple[np.ndarray, np.ndarray]:
    """Vertices of the level-``level`` icosphere (10*4**level + 2 nodes)."""
    if level < 0 or level > 7:
        raise InvalidConfig(f"icosphere level must be between 0 and 7 (got {level})")
    return _icosphere_nodes(int(level))


@lru_cache(maxsize=8)
def _icosphere_nodes(level: int) -> Tuple[np.ndarray, np.ndarray]:
    u = _icosahedron()
    for _ in range(level):
        faces = ConvexHull(u).simplices
        edges = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
        edges = np.unique(np.sort(edges, axis=1), axis=0)
        mid = u[edges[:, 0]] + u[edges[:, 1]]
        mid /= np.linalg.norm(mid, axis=1, keepdims=True)
        u = np.vstack([u, mid])

    weights = SphericalVoronoi(u, radius=1.0, center=np.zeros(3)).calculate_areas()
    u.setflags(write=False)
    weights.setflags(write=False)
    return u, weights


def sphere_quadrature(dim: int, resolution: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on S^{dim-1}.

    ``resolution`` is the node count for dim 2 and the subdivision level for
    dim 3; ``None`` takes the configured default.
    """
    if dim == 2:
        return circle_nodes(resolution if resolution is not None else S.circle_nodes)
    if dim == 3:
        return icosphere_nodes(resolution if resolution is not None else S.sphere_level)
    raise WrongDimension(f"sphere quadrature is available for n = 2, 3 (got n = {dim})")
