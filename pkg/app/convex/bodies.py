import logging
from dataclasses import dataclass
from math import factorial
from typing import List, Optional, Tuple, Union

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from app.common.errors import (
    DegenerateBody,
    DimensionMismatch,
    InvalidBodySpec,
    WrongDimension,
    ZeroDirection,
)
from app.common.linalg import min_tangential_eigenvalue
from app.common.sphere import sphere_quadrature
from app.settings import S

log = logging.getLogger(__name__)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _as_rows(p: np.ndarray, dim: int) -> Tuple[np.ndarray, bool]:
    p = np.asarray(p, dtype=float)
    single = p.ndim == 1
    p = np.atleast_2d(p)
    if p.shape[1] != dim:
        raise WrongDimension(f"expected {dim}-vectors, got shape {p.shape}")
    if np.any(np.all(p == 0.0, axis=1)):
        raise ZeroDirection("support direction must be non-zero")
    return p, single


def _simplex_measure(points: np.ndarray) -> float:
    """(k)-volume of the simplex spanned by k+1 points in R^n."""
    edges = points[1:] - points[0]
    k = edges.shape[0]
    if k == 0:
        return 1.0
    gram = edges @ edges.T
    return float(np.sqrt(max(np.linalg.det(gram), 0.0)) / factorial(k))


@dataclass(frozen=True, eq=False)
class Polytope:
    """Convex polytope with matching V- and H-representations.

    ``normals[j]`` / ``offsets[j]`` describe the facet {y : <u_j, y> = c_j};
    ``facet_areas`` and ``facet_centroids`` are the (n-1)-measure and the
    barycenter of each facet. In dimension 2 the vertices are listed
    counterclockwise.
    """

    vertices: np.ndarray
    normals: np.ndarray
    offsets: np.ndarray
    facet_areas: np.ndarray
    facet_centroids: np.ndarray

    @property
    def dim(self) -> int:
        return int(self.vertices.shape[1])

    @property
    def facets(self) -> List[Tuple[np.ndarray, float]]:
        return [(self.normals[j], float(self.offsets[j])) for j in range(self.normals.shape[0])]

    @classmethod
    def from_vertices(cls, points, tol: Optional[float] = None) -> "Polytope":
        tol = S.tol if tol is None else tol
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[0] == 0 or not np.all(np.isfinite(pts)):
            raise InvalidBodySpec("polytope vertices must be a non-empty list of finite n-vectors")
        n = pts.shape[1]
        if n == 1:
            return cls._segment(float(pts.min()), float(pts.max()), tol)
        if n > 4:
            raise WrongDimension(f"polytopes are supported for n <= 4 (got n = {n})")
        if pts.shape[0] <= n:
            raise DegenerateBody(f"{pts.shape[0]} points cannot span a {n}-dimensional body")

        # flatness of the point cloud, independent of its scale
        spread = np.linalg.svd(pts - pts.mean(axis=0), compute_uv=False)
        if spread[-1] <= tol * spread[0]:
            raise DegenerateBody("convex hull has empty interior")
        try:
            hull = ConvexHull(pts)
        except QhullError as e:
            raise DegenerateBody(f"convex hull has empty interior: {e}".splitlines()[0]) from e

        # Qhull triangulates facets; merge simplices lying on one hyperplane.
        groups: List[List[int]] = []
        for i, eq in enumerate(hull.equations):
            for g in groups:
                if np.allclose(hull.equations[g[0]], eq, atol=1e-9):
                    g.append(i)
                    break
            else:
                groups.append([i])

        normals = np.array([hull.equations[g[0], :-1] for g in groups])
        offsets = np.array([-hull.equations[g[0], -1] for g in groups])

        # A hull vertex is extreme iff its incident facet normals span R^n.
        candidates = hull.vertices
        extreme = []
        for v in candidates:
            incident = np.abs(normals @ pts[v] - offsets) <= 10 * tol * max(1.0, float(np.linalg.norm(pts[v])))
            if np.linalg.matrix_rank(normals[incident], tol=1e-9) == n:
                extreme.append(v)
        if len(extreme) < len(candidates):
            log.debug("pruned %d non-extreme hull vertices", len(candidates) - len(extreme))
            return cls.from_vertices(pts[extreme], tol=tol)

        areas = np.zeros(len(groups))
        centroids = np.zeros((len(groups), n))
        for j, g in enumerate(groups):
            for i in g:
                simplex = pts[hull.simplices[i]]
                a = _simplex_measure(simplex)
                areas[j] += a
                centroids[j] += a * simplex.mean(axis=0)
            centroids[j] /= areas[j]

        verts = pts[candidates]
        if n == 2:
            c = verts.mean(axis=0)
            verts = verts[np.argsort(np.arctan2(verts[:, 1] - c[1], verts[:, 0] - c[0]))]

        return cls(
            vertices=_frozen(verts),
            normals=_frozen(normals),
            offsets=_frozen(offsets),
            facet_areas=_frozen(areas),
            facet_centroids=_frozen(centroids),
        )

    @classmethod
    def _segment(cls, lo: float, hi: float, tol: float) -> "Polytope":
        if hi - lo <= tol * max(1.0, abs(lo), abs(hi)):
            raise DegenerateBody("segment has zero length")
        return cls(
            vertices=_frozen([[lo], [hi]]),
            normals=_frozen([[-1.0], [1.0]]),
            offsets=_frozen([-lo, hi]),
            facet_areas=_frozen([1.0, 1.0]),
            facet_centroids=_frozen([[lo], [hi]]),
        )

    def support(self, u):
        p, single = _as_rows(u, self.dim)
        out = (p @ self.vertices.T).max(axis=1)
        return float(out[0]) if single else out

    def interior_margin(self, x) -> float:
        """Smallest distance from ``x`` to a facet hyperplane (negative outside)."""
        return float(np.min(self.offsets - self.normals @ np.asarray(x, dtype=float)))

    def translate(self, t) -> "Polytope":
        t = np.asarray(t, dtype=float)
        return Polytope(
            vertices=_frozen(self.vertices + t),
            normals=self.normals,
            offsets=_frozen(self.offsets + self.normals @ t),
            facet_areas=self.facet_areas,
            facet_centroids=_frozen(self.facet_centroids + t),
        )

    def linear_map(self, T) -> "Polytope":
        T = np.asarray(T, dtype=float)
        if T.shape != (self.dim, self.dim):
            raise WrongDimension(f"linear map must be {self.dim}x{self.dim}")
        return Polytope.from_vertices(self.vertices @ T.T)

    def affine_map(self, T, t) -> "Polytope":
        return self.linear_map(T).translate(t)

    def diameter(self) -> float:
        d = self.vertices[:, None, :] - self.vertices[None, :, :]
        return float(np.sqrt((d ** 2).sum(axis=2)).max())

    def vertex_barycenter(self) -> np.ndarray:
        """Always interior."""
        return self.vertices.mean(axis=0)

    def edge_vectors(self) -> np.ndarray:
        """Counterclockwise edge vectors of a polygon."""
        if self.dim != 2:
            raise WrongDimension("edge chains are defined for polygons only")
        return np.roll(self.vertices, -1, axis=0) - self.vertices

    def representation_residual(self) -> float:
        """Largest violation of <u_j, v> <= c_j over vertices and facets."""
        return float(np.max(self.vertices @ self.normals.T - self.offsets[None, :]))


@dataclass(frozen=True, eq=False)
class SmoothBody:
    """Smooth, positively curved convex body given by its support function.

    h(p) = base(L^T p) + <p, center> where base is either the ellipsoid form
    sqrt(p^T A p) or the perturbed ball
    |p| + eps * (p^T C p / |p| + sum_i a_i p_i^4 / |p|^3).
    """

    kind: str
    dim: int
    form: np.ndarray
    quartic: np.ndarray
    eps: float
    linear: np.ndarray
    center: np.ndarray

    @classmethod
    def ellipsoid(cls, Q, center=None) -> "SmoothBody":
        """Body {x : (x - center)^T Q (x - center) <= 1}."""
        Q = np.asarray(Q, dtype=float)
        n = Q.shape[0]
        if Q.shape != (n, n) or n not in (2, 3):
            raise WrongDimension("ellipsoid matrix must be 2x2 or 3x3")
        if not np.allclose(Q, Q.T) or np.linalg.eigvalsh(Q).min() <= 0:
            raise InvalidBodySpec("ellipsoid matrix must be symmetric positive definite")
        body = cls(
            kind="ellipsoid",
            dim=n,
            form=_frozen(np.linalg.inv(Q)),
            quartic=_frozen(np.zeros(n)),
            eps=0.0,
            linear=_frozen(np.eye(n)),
            center=_frozen(np.zeros(n) if center is None else center),
        )
        return body

    @classmethod
    def ball(cls, dim: int, radius: float = 1.0, center=None) -> "SmoothBody":
        if radius <= 0:
            raise InvalidBodySpec("ball radius must be positive")
        return cls.ellipsoid(np.eye(dim) / radius ** 2, center=center)

    @classmethod
    def perturbed_ball(cls, dim: int, eps: float, quadratic=None, quartic=None, center=None) -> "SmoothBody":
        if dim not in (2, 3):
            raise WrongDimension("perturbed balls are available for n = 2, 3")
        C = np.zeros((dim, dim)) if quadratic is None else np.asarray(quadratic, dtype=float)
        a = np.ones(dim) if quartic is None else np.asarray(quartic, dtype=float)
        if C.shape != (dim, dim) or a.shape != (dim,):
            raise InvalidBodySpec("harmonic coefficients do not match the dimension")
        body = cls(
            kind="perturbed_ball",
            dim=dim,
            form=_frozen(0.5 * (C + C.T)),
            quartic=_frozen(a),
            eps=float(eps),
            linear=_frozen(np.eye(dim)),
            center=_frozen(np.zeros(dim) if center is None else center),
        )
        body.validate()
        return body

    def validate(self, resolution: Optional[int] = None) -> None:
        """Check positivity and positive curvature at the quadrature normals."""
        u, _ = sphere_quadrature(self.dim, resolution)
        h = self.support(u) - u @ self.center
        if h.min() <= 0:
            raise InvalidBodySpec("support function must be positive about the center")
        lam = min_tangential_eigenvalue(self.support_hess(u), u)
        if lam.min() <= S.curvature_min:
            raise InvalidBodySpec(
                f"tangential Hessian is not positive definite (min eigenvalue {lam.min():.3e})"
            )

    # ---- base support function in normalized coordinates q = L^T p

    def _base(self, q: np.ndarray) -> np.ndarray:
        if self.kind == "ellipsoid":
            return np.sqrt(np.einsum("mi,ij,mj->m", q, self.form, q))
        r = np.linalg.norm(q, axis=1)
        quad = np.einsum("mi,ij,mj->m", q, self.form, q)
        four = (q ** 4) @ self.quartic
        return r + self.eps * (quad / r + four / r ** 3)

    def _base_grad(self, q: np.ndarray) -> np.ndarray:
        if self.kind == "ellipsoid":
            Aq = q @ self.form
            return Aq / self._base(q)[:, None]
        r = np.linalg.norm(q, axis=1)[:, None]
        Cq = q @ self.form
        quad = (q * Cq).sum(axis=1)[:, None]
        fq = (q ** 4) @ self.quartic
        dfq = 4.0 * q ** 3 * self.quartic
        grad_a = 2.0 * Cq / r - quad * q / r ** 3
        grad_b = dfq / r ** 3 - 3.0 * fq[:, None] * q / r ** 5
        return q / r + self.eps * (grad_a + grad_b)

    def _base_hess(self, q: np.ndarray) -> np.ndarray:
        m, n = q.shape
        eye = np.eye(n)[None, :, :]
        if self.kind == "ellipsoid":
            h = self._base(q)[:, None, None]
            Aq = q @ self.form
            return self.form[None] / h - np.einsum("mi,mj->mij", Aq, Aq) / h ** 3
        r = np.linalg.norm(q, axis=1)[:, None, None]
        qq = np.einsum("mi,mj->mij", q, q)
        Cq = q @ self.form
        quad = (q * Cq).sum(axis=1)[:, None, None]
        fq = ((q ** 4) @ self.quartic)[:, None, None]
        dfq = 4.0 * q ** 3 * self.quartic
        sym_cq = np.einsum("mi,mj->mij", Cq, q) + np.einsum("mi,mj->mij", q, Cq)
        sym_dq = np.einsum("mi,mj->mij", dfq, q) + np.einsum("mi,mj->mij", q, dfq)
        hess_r = eye / r - qq / r ** 3
        hess_a = 2.0 * self.form[None] / r - 2.0 * sym_cq / r ** 3 - quad * eye / r ** 3 + 3.0 * quad * qq / r ** 5
        hess_b = (
            np.einsum("mi,ij->mij", 12.0 * q ** 2 * self.quartic, np.eye(n)) / r ** 3
            - 3.0 * sym_dq / r ** 5
            - 3.0 * fq * eye / r ** 5
            + 15.0 * fq * qq / r ** 7
        )
        return hess_r + self.eps * (hess_a + hess_b)

    # ---- public oracles, vectorized over rows

    def support(self, u):
        p, single = _as_rows(u, self.dim)
        out = self._base(p @ self.linear) + p @ self.center
        return float(out[0]) if single else out

    def support_grad(self, u) -> np.ndarray:
        """Boundary point with outer normal u."""
        p, single = _as_rows(u, self.dim)
        out = self._base_grad(p @ self.linear) @ self.linear.T + self.center
        return out[0] if single else out

    def support_hess(self, u) -> np.ndarray:
        p, single = _as_rows(u, self.dim)
        H = np.einsum("ia,mab,jb->mij", self.linear, self._base_hess(p @ self.linear), self.linear)
        return H[0] if single else H

    def interior_margin(self, x, resolution: Optional[int] = None) -> float:
        """min over quadrature normals of h(u) - <u, x>."""
        u, _ = sphere_quadrature(self.dim, resolution)
        return float(np.min(self.support(u) - u @ np.asarray(x, dtype=float)))

    def translate(self, t) -> "SmoothBody":
        return SmoothBody(
            kind=self.kind,
            dim=self.dim,
            form=self.form,
            quartic=self.quartic,
            eps=self.eps,
            linear=self.linear,
            center=_frozen(self.center + np.asarray(t, dtype=float)),
        )

    def linear_map(self, T) -> "SmoothBody":
        T = np.asarray(T, dtype=float)
        if T.shape != (self.dim, self.dim):
            raise WrongDimension(f"linear map must be {self.dim}x{self.dim}")
        if abs(np.linalg.det(T)) <= S.tol:
            raise DegenerateBody("linear map is singular")
        return SmoothBody(
            kind=self.kind,
            dim=self.dim,
            form=self.form,
            quartic=self.quartic,
            eps=self.eps,
            linear=_frozen(T @ self.linear),
            center=_frozen(T @ self.center),
        )

    def affine_map(self, T, t) -> "SmoothBody":
        return self.linear_map(T).translate(t)

    def is_centered_ellipsoid(self) -> bool:
        return self.kind == "ellipsoid" and bool(np.allclose(self.center, 0.0, atol=S.tol))

    def effective_form(self) -> np.ndarray:
        """L A L^T for ellipsoids, so that h(p) = sqrt(p^T M p) + <p, center>."""
        return self.linear @ self.form @ self.linear.T

    def diameter(self, resolution: Optional[int] = None) -> float:
        u, _ = sphere_quadrature(self.dim, resolution)
        return float(np.max(self.support(u) + self.support(-u)))


ConvexBody = Union[Polytope, SmoothBody]


def ensure_same_dim(*bodies: ConvexBody) -> int:
    dims = {b.dim for b in bodies}
    if len(dims) != 1:
        raise DimensionMismatch(f"bodies have different dimensions: {sorted(dims)}")
    return dims.pop()
