import logging
from dataclasses import dataclass
from typing import Optional, Type, Union

import numpy as np
from scipy.optimize import linprog

from app.common.errors import (
    CurvatureDegenerate,
    DegenerateBody,
    GeometryError,
    OriginNotInterior,
    PointNotInterior,
    UnsupportedBody,
    WrongDimension,
)
from app.common.linalg import (
    gauss_jacobian,
    hyperplane_basis,
    min_tangential_eigenvalue,
    normalize_rows,
    tangent_frames,
)
from app.common.sphere import sphere_quadrature
from app.convex.bodies import ConvexBody, Polytope, SmoothBody
from app.convex.models import LinearHyperplane, SurfaceAreaMeasure
from app.settings import S

log = logging.getLogger(__name__)

Directions = Union[LinearHyperplane, np.ndarray]


def _directions(H: Directions, dim: int) -> np.ndarray:
    if isinstance(H, LinearHyperplane):
        nu = H.normal[None, :]
    else:
        nu = normalize_rows(H)
    if nu.shape[1] != dim:
        raise WrongDimension(f"hyperplane normal has dimension {nu.shape[1]}, body has {dim}")
    return nu


# ----------------------------
# Interior tests
# ----------------------------


def interior_margin(K: ConvexBody, x, resolution: Optional[int] = None) -> float:
    if isinstance(K, Polytope):
        return K.interior_margin(x)
    return K.interior_margin(x, resolution)


def require_interior(
    K: ConvexBody,
    x,
    exc: Type[GeometryError] = PointNotInterior,
    tol: Optional[float] = None,
) -> None:
    tol = S.tol if tol is None else tol
    margin = interior_margin(K, x)
    if margin <= tol:
        raise exc(f"point {np.round(np.asarray(x, dtype=float), 12).tolist()} is not interior (margin {margin:.3e})")


def inradius(K: ConvexBody) -> float:
    """Radius of the largest inscribed ball (Chebyshev ball for polytopes)."""
    if isinstance(K, SmoothBody):
        return K.interior_margin(K.center)
    n = K.dim
    c = np.zeros(n + 1)
    c[-1] = -1.0
    A = np.hstack([K.normals, np.ones((K.normals.shape[0], 1))])
    res = linprog(c, A_ub=A, b_ub=K.offsets, bounds=[(None, None)] * n + [(0, None)], method="highs")
    if not res.success:
        raise DegenerateBody(f"Chebyshev ball LP failed: {res.message}")
    return float(res.x[-1])


def initial_point(K: ConvexBody) -> np.ndarray:
    if isinstance(K, Polytope):
        return K.vertex_barycenter()
    return np.array(K.center, dtype=float)


def diameter(K: ConvexBody) -> float:
    return K.diameter()


# ----------------------------
# Polarity and support
# ----------------------------


def polar(K: ConvexBody, tol: Optional[float] = None) -> ConvexBody:
    """Polar body {y : <x, y> <= 1 for all x in K}.

    Polytopes map facet (u_j, c_j) to vertex u_j / c_j. For smooth bodies
    only centered ellipsoids have a closed form.
    """
    tol = S.tol if tol is None else tol
    if isinstance(K, SmoothBody):
        if not K.is_centered_ellipsoid():
            raise UnsupportedBody(f"polar of a {K.kind} body is only available for centered ellipsoids")
        return SmoothBody.ellipsoid(K.effective_form())

    if np.min(K.offsets) <= tol:
        raise OriginNotInterior(f"origin is not interior (smallest facet offset {np.min(K.offsets):.3e})")
    return Polytope.from_vertices(K.normals / K.offsets[:, None], tol=tol)


def support(K: ConvexBody, u):
    return K.support(u)


# ----------------------------
# Volumes and moments
# ----------------------------


@dataclass(frozen=True)
class MonteCarloMoments:
    volume: float
    volume_stderr: float
    moment: np.ndarray
    moment_stderr: np.ndarray


def monte_carlo_moments(
    P: Polytope, samples: Optional[int] = None, seed: Optional[int] = None, chunk: int = 100_000
) -> MonteCarloMoments:
    """Hit-or-miss estimates of |P| and of the moment integral over P."""
    samples = S.mc_samples if samples is None else int(samples)
    seed = S.seed if seed is None else int(seed)
    rng = np.random.default_rng(seed)

    lo = P.vertices.min(axis=0)
    hi = P.vertices.max(axis=0)
    box = float(np.prod(hi - lo))

    hits = 0
    s1 = np.zeros(P.dim)
    s2 = np.zeros(P.dim)
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        pts = lo + (hi - lo) * rng.random((m, P.dim))
        inside = np.all(pts @ P.normals.T <= P.offsets, axis=1)
        hits += int(inside.sum())
        s1 += pts[inside].sum(axis=0)
        s2 += (pts[inside] ** 2).sum(axis=0)
        done += m

    p = hits / samples
    volume = box * p
    volume_err = box * np.sqrt(p * (1.0 - p) / samples)
    # per-sample estimator box * x * 1_P(x)
    mean = box * s1 / samples
    second = box ** 2 * s2 / samples
    moment_err = np.sqrt(np.maximum(second - mean ** 2, 0.0) / samples)
    return MonteCarloMoments(volume=volume, volume_stderr=float(volume_err), moment=mean, moment_stderr=moment_err)


@dataclass(frozen=True)
class VolumeEstimate:
    value: float
    stderr: float


def volume_estimate(P: Polytope) -> VolumeEstimate:
    """|P| with its standard error: exact cone decomposition over the facets
    for n <= 3 (stderr 0), hit-or-miss Monte-Carlo for n = 4."""
    if P.dim == 4:
        mc = monte_carlo_moments(P)
        return VolumeEstimate(value=mc.volume, stderr=mc.volume_stderr)
    p = P.vertex_barycenter()
    heights = P.offsets - P.normals @ p
    return VolumeEstimate(value=float(np.dot(P.facet_areas, heights) / P.dim), stderr=0.0)


def volume(P: Polytope) -> float:
    """Lebesgue measure of P (the value of ``volume_estimate``)."""
    return volume_estimate(P).value


def centroid_integral(P: Polytope) -> np.ndarray:
    """Moment integral of x over P (volume times barycenter)."""
    n = P.dim
    if n == 4:
        return monte_carlo_moments(P).moment
    p = P.vertex_barycenter()
    cone_volumes = P.facet_areas * (P.offsets - P.normals @ p) / n
    cone_centroids = p + n / (n + 1.0) * (P.facet_centroids - p)
    return cone_volumes @ cone_centroids


def surface_area_measure(B: ConvexBody, resolution: Optional[int] = None) -> SurfaceAreaMeasure:
    """Boundary measure pushed to unoriented tangent-hyperplane directions."""
    if isinstance(B, Polytope):
        if B.dim < 2:
            raise WrongDimension("surface area measure needs n >= 2")
        normals = []
        weights = []
        for u, area in zip(B.normals, B.facet_areas):
            u = LinearHyperplane(u).normal
            for k, v in enumerate(normals):
                if np.allclose(u, v, atol=1e-9):
                    weights[k] += area
                    break
            else:
                normals.append(u)
                weights.append(float(area))
        return SurfaceAreaMeasure(normals=np.array(normals), weights=np.array(weights), atomic=True)

    u, w = sphere_quadrature(B.dim, resolution)
    hess = B.support_hess(u)
    lam = min_tangential_eigenvalue(hess, u)
    if lam.min() <= S.curvature_min:
        raise CurvatureDegenerate(f"tangential Hessian degenerate (min eigenvalue {lam.min():.3e})")
    return SurfaceAreaMeasure(normals=np.array(u), weights=w * gauss_jacobian(hess, u), atomic=False)


def body_volume(K: ConvexBody, resolution: Optional[int] = None) -> float:
    """|K|; for smooth bodies (1/n) * integral of h over the boundary measure."""
    if isinstance(K, Polytope):
        return volume(K)
    mu = surface_area_measure(K, resolution)
    return float(np.dot(mu.weights, K.support(mu.normals)) / K.dim)


def _smooth_polar_support(K: SmoothBody, resolution: Optional[int]):
    u, w = sphere_quadrature(K.dim, resolution)
    h = K.support(u)
    if h.min() <= S.tol:
        raise OriginNotInterior("origin is not interior to the smooth body")
    return u, w, h


def polar_volume(K: ConvexBody, resolution: Optional[int] = None) -> float:
    """|K°|; for smooth bodies (1/n) * integral of h^{-n} over the sphere."""
    if isinstance(K, Polytope):
        return volume(polar(K))
    u, w, h = _smooth_polar_support(K, resolution)
    return float(np.dot(w, h ** (-K.dim)) / K.dim)


def polar_centroid_integral(K: ConvexBody, resolution: Optional[int] = None) -> np.ndarray:
    """Moment integral over K°."""
    if isinstance(K, Polytope):
        return centroid_integral(polar(K))
    u, w, h = _smooth_polar_support(K, resolution)
    return (w * h ** (-(K.dim + 1))) @ u / (K.dim + 1)


# ----------------------------
# Projections
# ----------------------------


def project_onto_hyperplane(P: Polytope, H: LinearHyperplane) -> Polytope:
    """Orthogonal projection onto H, in coordinates of ``hyperplane_basis(H.normal)``."""
    if P.dim not in (2, 3):
        raise WrongDimension("projections are available for n = 2, 3")
    if H.dim != P.dim:
        raise WrongDimension("hyperplane and polytope dimensions differ")
    return Polytope.from_vertices(P.vertices @ hyperplane_basis(H.normal))


def projection_volume(D: ConvexBody, H: Directions, angles: Optional[int] = None) -> Union[float, np.ndarray]:
    """(n-1)-volume of the orthogonal projection of D onto each hyperplane.

    Polytopes use the facet sum 1/2 * sum_i |F_i| |<n_i, nu>|. Smooth bodies
    use h(w) + h(-w) in the plane (n = 2) and 1/2 * integral of (h^2 - h'^2)
    around the projected outline (n = 3).
    """
    nu = _directions(H, D.dim)
    if isinstance(D, Polytope):
        out = 0.5 * np.abs(nu @ D.normals.T) @ D.facet_areas
    elif D.dim == 2:
        w = np.column_stack([-nu[:, 1], nu[:, 0]])
        out = D.support(w) + D.support(-w)
    else:
        out = _outline_area(D, nu, S.slice_angles if angles is None else angles)
    return float(out[0]) if isinstance(H, LinearHyperplane) else out


def _angle_grid(nu: np.ndarray, count: int):
    frames = tangent_frames(nu)
    theta = 2.0 * np.pi * np.arange(count) / count
    c, s = np.cos(theta), np.sin(theta)
    w = c[None, :, None] * frames[:, None, :, 0] + s[None, :, None] * frames[:, None, :, 1]
    dw = -s[None, :, None] * frames[:, None, :, 0] + c[None, :, None] * frames[:, None, :, 1]
    return w, dw


def _outline_area(D: SmoothBody, nu: np.ndarray, count: int) -> np.ndarray:
    w, dw = _angle_grid(nu, count)
    m = nu.shape[0]
    flat = w.reshape(-1, 3)
    h = D.support(flat).reshape(m, count)
    h_theta = (D.support_grad(flat) * dw.reshape(-1, 3)).sum(axis=1).reshape(m, count)
    return 0.5 * (h ** 2 - h_theta ** 2).sum(axis=1) * (2.0 * np.pi / count)


def projection_moment(P: Polytope, u: np.ndarray) -> np.ndarray:
    """Moment integral of y over the orthogonal projection of P onto u^perp.

    Returned in ambient coordinates; vectorized over rows of ``u``.
    """
    U = normalize_rows(u)
    cos = np.abs(U @ P.normals.T)
    weighted = 0.5 * cos * P.facet_areas
    raw = weighted @ P.facet_centroids
    along = (raw * U).sum(axis=1, keepdims=True)
    out = raw - along * U
    return out[0] if np.asarray(u).ndim == 1 else out


# ----------------------------
# Slices of the polar body
# ----------------------------


def _slice_support(K: SmoothBody, x: np.ndarray, w: np.ndarray, nu: np.ndarray, max_iter: int = 80) -> np.ndarray:
    """Support function of H ∩ (K - x) at w in H: min over t of h_{K-x}(w + t nu).

    Safeguarded Newton on the convex scalar problem, vectorized over rows.
    """
    m = w.shape[0]

    def slope(t: np.ndarray) -> np.ndarray:
        p = w + t[:, None] * nu
        return ((K.support_grad(p) - x) * nu).sum(axis=1)

    lo = -np.ones(m)
    hi = np.ones(m)
    for _ in range(60):
        bad_lo = slope(lo) >= 0
        bad_hi = slope(hi) <= 0
        if not (bad_lo.any() or bad_hi.any()):
            break
        lo[bad_lo] *= 2.0
        hi[bad_hi] *= 2.0
    else:
        raise PointNotInterior("slice of K - x is unbounded in a direction; x is not interior")

    t = np.zeros(m)
    for _ in range(max_iter):
        p = w + t[:, None] * nu
        d1 = ((K.support_grad(p) - x) * nu).sum(axis=1)
        d2 = np.einsum("mi,mij,mj->m", nu, K.support_hess(p), nu)
        lo = np.where(d1 < 0, t, lo)
        hi = np.where(d1 > 0, t, hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = t - d1 / d2
        ok = (d2 > 0) & (newton > lo) & (newton < hi)
        t_new = np.where(ok, newton, 0.5 * (lo + hi))
        if np.max(np.abs(t_new - t)) <= 1e-14 * (1.0 + np.max(np.abs(t))):
            t = t_new
            break
        t = t_new

    p = w + t[:, None] * nu
    return K.support(p) - p @ x


def slice_polar_volumes(K: ConvexBody, H: Directions, x, angles: Optional[int] = None) -> np.ndarray:
    """f_K(H, x) = |(H ∩ (K - x))°|_{n-1} for every hyperplane normal in H."""
    x = np.asarray(x, dtype=float)
    nu = _directions(H, K.dim)
    require_interior(K, x)

    if isinstance(K, Polytope):
        # (H ∩ C)° is the projection of C° onto H
        return np.atleast_1d(projection_volume(polar(K.translate(-x)), nu))

    if K.dim == 2:
        w = np.column_stack([-nu[:, 1], nu[:, 0]])
        h_pos = _slice_support(K, x, w, nu)
        h_neg = _slice_support(K, x, -w, nu)
        if min(h_pos.min(), h_neg.min()) <= 0:
            raise PointNotInterior("slice through x has empty relative interior")
        return 1.0 / h_pos + 1.0 / h_neg

    count = S.slice_angles if angles is None else angles
    w, _ = _angle_grid(nu, count)
    m = nu.shape[0]
    h = _slice_support(K, x, w.reshape(-1, 3), np.repeat(nu, count, axis=0)).reshape(m, count)
    if h.min() <= 0:
        raise PointNotInterior("slice through x has empty relative interior")
    return 0.5 * (h ** -2.0).sum(axis=1) * (2.0 * np.pi / count)


def slice_polar_volume(K: ConvexBody, H: LinearHyperplane, x, angles: Optional[int] = None) -> float:
    return float(slice_polar_volumes(K, H, x, angles)[0])
