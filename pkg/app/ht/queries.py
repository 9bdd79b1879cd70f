import logging
from typing import Iterable, List, Optional, Tuple

import numpy as np

from app.common.errors import OriginNotInterior, WrongDimension, ZeroDirection
from app.common.linalg import normalize_rows
from app.common.sphere import circle_nodes, sphere_quadrature
from app.convex.bodies import ConvexBody, Polytope, ensure_same_dim
from app.convex.queries import (
    body_volume,
    polar,
    polar_volume,
    projection_volume,
    require_interior,
    slice_polar_volumes,
    surface_area_measure,
)
from app.ht.models import DualityRoutes, HTConstants, IsoperimetricResult
from app.settings import S

log = logging.getLogger(__name__)

eps = HTConstants.eps


def ht_volume(A: ConvexBody, B: ConvexBody, resolution: Optional[int] = None) -> float:
    """Holmes-Thompson volume of A in the norm with unit ball B: |A| |B°| / eps_n."""
    n = ensure_same_dim(A, B)
    require_interior(B, np.zeros(n), OriginNotInterior)
    return body_volume(A, resolution) * polar_volume(B, resolution) / eps(n)


def ht_area(M: ConvexBody, B: ConvexBody, resolution: Optional[int] = None) -> float:
    """A_B(∂M): boundary measure of M against the polar-slice density of B."""
    n = ensure_same_dim(M, B)
    require_interior(B, np.zeros(n), OriginNotInterior)
    mu = surface_area_measure(M, resolution)
    density = slice_polar_volumes(B, mu.normals, np.zeros(n))
    return float(np.dot(mu.weights, density) / eps(n - 1))


def ht_area_routes(K: ConvexBody, B: ConvexBody, resolution: Optional[int] = None) -> DualityRoutes:
    """A_K(∂B) computed directly and as A_{B°}(∂K°) through polar K.

    The polar route sums the projection volumes of B over the boundary
    measure of K°, so it needs K° in closed form (polytope or centered
    ellipsoid).
    """
    n = ensure_same_dim(K, B)
    require_interior(B, np.zeros(n), OriginNotInterior)
    k_side = ht_area(B, K, resolution)
    mu = surface_area_measure(polar(K), resolution)
    polar_side = float(np.dot(mu.weights, np.atleast_1d(projection_volume(B, mu.normals))) / eps(n - 1))
    return DualityRoutes(k_side=k_side, polar_side=polar_side)


def ht_area_dual(K: ConvexBody, B: ConvexBody, resolution: Optional[int] = None) -> float:
    """A_{B°}(∂K°), evaluated on the K side as A_K(∂B)."""
    n = ensure_same_dim(K, B)
    require_interior(B, np.zeros(n), OriginNotInterior)
    return ht_area(B, K, resolution)


def _boundary_chain(K: ConvexBody, resolution: Optional[int]) -> np.ndarray:
    """Edge vectors of ∂K; smooth boundaries are sampled through the Gauss map."""
    if isinstance(K, Polytope):
        return K.edge_vectors()
    u, _ = circle_nodes(resolution or S.circle_nodes)
    pts = K.support_grad(u)
    return np.roll(pts, -1, axis=0) - pts


def _polar_chain(B: ConvexBody, resolution: Optional[int]) -> np.ndarray:
    """Edge vectors of ∂B°; smooth polars are sampled radially at u / h_B(u)."""
    if isinstance(B, Polytope):
        return polar(B).edge_vectors()
    u, _ = circle_nodes(resolution or S.circle_nodes)
    h = B.support(u)
    if h.min() <= S.tol:
        raise OriginNotInterior("origin is not interior to B")
    pts = u / h[:, None]
    return np.roll(pts, -1, axis=0) - pts


def symplectic_area_2d(K: ConvexBody, B: ConvexBody, resolution: Optional[int] = None) -> float:
    """(1 / (2 eps_1)) double integral over ∂K x ∂B° of |p'(t) . x'(s)|.

    Exact for polygon pairs: the integrand is constant on each edge pair.
    """
    n = ensure_same_dim(K, B)
    if n != 2:
        raise WrongDimension(f"the symplectic formula is implemented for n = 2 (got n = {n})")
    require_interior(B, np.zeros(2), OriginNotInterior)
    E = _boundary_chain(K, resolution)
    F = _polar_chain(B, resolution)
    return float(np.abs(E @ F.T).sum() / (2.0 * eps(1)))


def isoperimetrix_support(K: ConvexBody, u) -> float:
    """h_{I_K}(u) = |π_{u⊥}(K°)| / eps_{n-1}."""
    u = np.asarray(u, dtype=float)
    if not np.any(u):
        raise ZeroDirection("direction must be non-zero")
    return float(isoperimetrix_profile(K, u[None, :])[0])


def isoperimetrix_profile(K: ConvexBody, directions: np.ndarray) -> np.ndarray:
    n = K.dim
    require_interior(K, np.zeros(n), OriginNotInterior)
    nu = normalize_rows(directions)
    return slice_polar_volumes(K, nu, np.zeros(n)) / eps(n - 1)


def isoperimetrix_grid(K: ConvexBody, resolution: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Isoperimetrix support sampled at the sphere quadrature nodes."""
    u, _ = sphere_quadrature(K.dim, resolution)
    return np.array(u), isoperimetrix_profile(K, u)


def isoperimetric_ratio(K: ConvexBody, B: ConvexBody, resolution: Optional[int] = None) -> IsoperimetricResult:
    """A_K(∂B)^n / vol_K(B)^{n-1} against (4n)^n / (n! eps_n)."""
    n = ensure_same_dim(K, B)
    area = ht_area(B, K, resolution)
    vol = ht_volume(B, K, resolution)
    ratio = area ** n / vol ** (n - 1)
    return IsoperimetricResult(ratio=ratio, bound=HTConstants.isoperimetric_bound(n), area=area, volume=vol)


def continuity_probe(
    K: Polytope,
    B: ConvexBody,
    deltas: Iterable[float] = (1e-3, 1e-4, 1e-5),
    seed: Optional[int] = None,
    resolution: Optional[int] = None,
) -> List[Tuple[float, float]]:
    """|A_B(∂K_delta) - A_B(∂K)| for vertex perturbations of size delta."""
    rng = np.random.default_rng(S.seed if seed is None else seed)
    directions = normalize_rows(rng.normal(size=K.vertices.shape))
    base = ht_area(K, B, resolution)
    out = []
    for delta in deltas:
        moved = Polytope.from_vertices(K.vertices + delta * directions)
        out.append((float(delta), abs(ht_area(moved, B, resolution) - base)))
    log.debug("continuity probe %s", out)
    return out
