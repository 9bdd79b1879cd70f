"""Equiaffine (Blaschke) geometry of smooth convex boundaries and the dual centroid.

Everything is parametrized by the Gauss map: the boundary point with outer
normal u is x(u) = grad h(u), and dx = R du with R = Hess h(u) restricted to
u^perp. With phi(u) = det(R)^{-1/(n+1)} and its 1-homogeneous extension
Phi(p) = |p| phi(p / |p|), the Blaschke normal is Xi(u) = -grad Phi(u), whose
normal component is exactly -phi(u).
"""

import logging
from typing import Callable, Optional

import numpy as np

from app.common.errors import CurvatureDegenerate, GeometryError, OriginNotInterior, UnsupportedBody
from app.common.linalg import (
    det_with_frame,
    gauss_jacobian,
    min_tangential_eigenvalue,
    normalize,
    normalize_rows,
    tangent_frames,
    tangential_pinv,
)
from app.common.sphere import sphere_quadrature
from app.convex.bodies import ConvexBody, Polytope, SmoothBody, ensure_same_dim
from app.convex.queries import polar, projection_moment, require_interior
from app.equiaffine.models import EquiaffineData, EquiaffineResiduals, TangentFrame
from app.settings import S

log = logging.getLogger(__name__)


def _require_smooth(B: ConvexBody) -> SmoothBody:
    if not isinstance(B, SmoothBody):
        raise UnsupportedBody("equiaffine data needs a smooth, positively curved body")
    return B


def curvature_power(B: SmoothBody, u: np.ndarray) -> np.ndarray:
    """phi(u) = det(R(u))^{-1/(n+1)} = (Gauss curvature)^{1/(n+1)}, vectorized over rows."""
    u = normalize_rows(u)
    hess = B.support_hess(u)
    lam = min_tangential_eigenvalue(hess, u)
    if lam.min() <= S.curvature_min:
        raise CurvatureDegenerate(f"tangential Hessian near-singular (min eigenvalue {lam.min():.3e})")
    return gauss_jacobian(hess, u) ** (-1.0 / (B.dim + 1))


def affine_normal(B: SmoothBody, u: np.ndarray, step: Optional[float] = None) -> np.ndarray:
    """Blaschke normal Xi at the boundary points x(u), vectorized over rows.

    The tangential part of grad Phi uses central differences of phi along an
    orthonormal tangent frame.
    """
    step = S.fd_step if step is None else step
    u = normalize_rows(u)
    frames = tangent_frames(u)
    phi = curvature_power(B, u)
    grad_t = np.zeros_like(u)
    for k in range(u.shape[1] - 1):
        e = frames[:, :, k]
        plus = curvature_power(B, u + step * e)
        minus = curvature_power(B, u - step * e)
        grad_t += ((plus - minus) / (2.0 * step))[:, None] * e
    return -(phi[:, None] * u + grad_t)


def tangent_frame(B: ConvexBody, u, basis: Optional[np.ndarray] = None) -> TangentFrame:
    """Frame at x(u); defaults to an orthonormal basis with det(Xi, basis) > 0."""
    B = _require_smooth(B)
    u = normalize(u)
    if basis is None:
        basis = tangent_frames(u[None, :])[0]
        # Xi points inward, so det(Xi, basis) has the sign of -det(u, basis)
        if det_with_frame(u, basis) > 0:
            basis = basis.copy()
            basis[:, -1] *= -1.0
    return TangentFrame(x=B.support_grad(u), u=u, basis=np.asarray(basis, dtype=float))


def blaschke_normal(B: ConvexBody, u, frame: Optional[TangentFrame] = None, step: Optional[float] = None) -> EquiaffineData:
    """Blaschke normal, equiaffine metric and area density at x = grad h(u)."""
    B = _require_smooth(B)
    frame = frame if frame is not None else tangent_frame(B, u)
    uu = frame.u[None, :]
    Xi = affine_normal(B, uu, step)[0]
    phi = float(curvature_power(B, uu)[0])
    r_pinv = tangential_pinv(B.support_hess(uu), uu)[0]
    g = frame.basis.T @ r_pinv @ frame.basis / phi
    return EquiaffineData(
        frame=frame,
        Xi=Xi,
        g=g,
        alpha_density=abs(det_with_frame(Xi, frame.basis)),
        curvature_power=phi,
    )


def _curve_step(B: SmoothBody, u: np.ndarray, direction: np.ndarray, step: float):
    """Normals u(+-s) of the boundary curve through x(u) with velocity ``direction``."""
    uu = u[None, :]
    w = tangential_pinv(B.support_hess(uu), uu)[0] @ direction
    s = step / np.linalg.norm(w)
    return normalize(u + s * w), normalize(u - s * w), s


def equiaffine_residuals(B: ConvexBody, u, step: Optional[float] = None) -> EquiaffineResiduals:
    """Residuals of the defining conditions of the Blaschke normal at x(u).

    ``tangency``: largest normal component of the derivative of Xi along the
    boundary, relative to |Xi|. ``volume_condition``: relative gap between
    det(Xi, frame)^2 and det g. ``collinearity``: sine of the angle between
    Xi and x - center (zero on ellipsoids).
    """
    B = _require_smooth(B)
    step = S.fd_step if step is None else step
    data = blaschke_normal(B, u, step=step)
    frame = data.frame
    norm_xi = np.linalg.norm(data.Xi)

    tangency = 0.0
    for k in range(frame.basis.shape[1]):
        up, um, s = _curve_step(B, frame.u, frame.basis[:, k], step)
        xi_p, xi_m = affine_normal(B, np.vstack([up, um]), step)
        d_xi = (xi_p - xi_m) / (2.0 * s)
        tangency = max(tangency, abs(d_xi @ frame.u) / (norm_xi * np.linalg.norm(frame.basis[:, k])))

    det_g = float(np.linalg.det(data.g))
    volume_condition = abs(det_with_frame(data.Xi, frame.basis) ** 2 - det_g) / abs(det_g)

    radial = frame.x - B.center
    cos = abs(data.Xi @ radial) / (norm_xi * np.linalg.norm(radial))
    return EquiaffineResiduals(
        tangency=float(tangency),
        volume_condition=float(volume_condition),
        transversality=abs(det_with_frame(data.Xi, frame.basis)),
        collinearity=float(np.sqrt(max(0.0, 1.0 - cos ** 2))),
        metric_min_eigenvalue=float(np.linalg.eigvalsh(data.g).min()),
    )


def L_matrix(frame: TangentFrame, B: ConvexBody, step: Optional[float] = None) -> np.ndarray:
    """L_ij = det(D_{xi_i} X_j, xi_1, ..., xi_{n-1}).

    X_j extends xi_j by tangential projection, X_j(u) = xi_j - <xi_j, u> u, and
    is differentiated along the boundary curve with velocity xi_i.
    """
    B = _require_smooth(B)
    step = S.fd_step if step is None else step
    m = frame.basis.shape[1]
    L = np.zeros((m, m))
    for i in range(m):
        up, um, s = _curve_step(B, frame.u, frame.basis[:, i], step)
        for j in range(m):
            xi = frame.basis[:, j]
            dX = ((xi - (xi @ up) * up) - (xi - (xi @ um) * um)) / (2.0 * s)
            L[i, j] = det_with_frame(dX, frame.basis)
    return L


def L_value(frame: TangentFrame, B: ConvexBody, step: Optional[float] = None) -> float:
    return float(np.linalg.det(L_matrix(frame, B, step)))


def dual_centroid(
    K: ConvexBody,
    B: ConvexBody,
    resolution: Optional[int] = None,
    mu_density: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> np.ndarray:
    """C_B(K*): boundary average over ∂B of moments of the projections π_x(K°).

    At x(u) the projection π_x has kernel span(u) and image Xi^perp; the
    Euclidean moment of the orthogonal projection of K° onto u^perp is pushed
    forward by π_x. ``mu_density`` rescales the boundary measure by a positive
    function and the fibre measures by its reciprocal.
    """
    B = _require_smooth(B)
    n = ensure_same_dim(K, B)
    if not isinstance(K, Polytope):
        raise UnsupportedBody("dual centroid needs a polytope K")
    require_interior(K, np.zeros(n), OriginNotInterior)

    u, w = sphere_quadrature(n, resolution)
    hess = B.support_hess(u)
    weights = w * gauss_jacobian(hess, u)
    Xi = affine_normal(B, u)
    moments = projection_moment(polar(K), u)
    ratio = (moments * Xi).sum(axis=1) / (u * Xi).sum(axis=1)
    pushed = moments - ratio[:, None] * u

    if mu_density is not None:
        rho = np.asarray(mu_density(np.array(u)), dtype=float)
        if np.any(rho <= 0):
            raise GeometryError("measure density must be positive")
        return (weights * rho) @ (pushed / rho[:, None])
    return weights @ pushed


def euclidean_dual_centroid(K: Polytope, resolution: Optional[int] = None) -> np.ndarray:
    """CS(K°): sphere average of the moments of the orthogonal projections of K°."""
    require_interior(K, np.zeros(K.dim), OriginNotInterior)
    u, w = sphere_quadrature(K.dim, resolution)
    return w @ projection_moment(polar(K), u)
