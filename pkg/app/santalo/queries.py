import logging
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize, root

from app.common.errors import GeometryError, PointNotInterior, WrongDimension
from app.common.linalg import normalize, normalize_rows
from app.convex.bodies import ConvexBody, Polytope, SmoothBody, ensure_same_dim
from app.convex.models import LinearHyperplane
from app.convex.queries import (
    initial_point,
    inradius,
    interior_margin,
    polar_centroid_integral,
    polar_volume,
    require_interior,
    slice_polar_volume,
    slice_polar_volumes,
    surface_area_measure,
)
from app.equiaffine.queries import dual_centroid
from app.ht.models import HTConstants
from app.santalo.models import NonuniqueExample, PropernessProbe, SolveResult, SolveStatus
from app.settings import S

log = logging.getLogger(__name__)

Function = Callable[[np.ndarray], float]
Gradient = Callable[[np.ndarray], np.ndarray]


class HTObjective:
    """x -> A_{K-x}(∂B), with the boundary measure of B computed once."""

    def __init__(self, K: ConvexBody, B: ConvexBody, resolution: Optional[int] = None):
        self.n = ensure_same_dim(K, B)
        self.K = K
        self.B = B
        self.resolution = resolution
        self.mu = surface_area_measure(B, resolution)
        self.scale = 1.0 / HTConstants.eps(self.n - 1)

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(self.scale * np.dot(self.mu.weights, slice_polar_volumes(self.K, self.mu.normals, x)))

    @property
    def has_centroid_gradient(self) -> bool:
        return isinstance(self.B, SmoothBody) and isinstance(self.K, Polytope)

    def gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.has_centroid_gradient:
            require_interior(self.K, x)
            c = dual_centroid(self.K.translate(-x), self.B, self.resolution)
            return (self.n + 1) * self.scale * c
        return central_difference(self, x, 1e-5 * inradius(self.K))


def central_difference(f: Function, x: np.ndarray, step: float) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for i in range(x.shape[0]):
        e = np.zeros_like(x)
        e[i] = step
        g[i] = (f(x + e) - f(x - e)) / (2.0 * step)
    return g


def objective(x, K: ConvexBody, B: ConvexBody, resolution: Optional[int] = None) -> float:
    """A_{K-x}(∂B) = (1 / eps_{n-1}) * integral of f_K(H, x) against the boundary measure of B."""
    return HTObjective(K, B, resolution)(x)


def gradient(x, K: ConvexBody, B: ConvexBody, resolution: Optional[int] = None) -> np.ndarray:
    """((n+1) / eps_{n-1}) C_B((K-x)*) for smooth B; finite differences otherwise."""
    return HTObjective(K, B, resolution).gradient(x)


def classical_objective(x, K: ConvexBody, resolution: Optional[int] = None) -> float:
    """|(K - x)°|."""
    x = np.asarray(x, dtype=float)
    require_interior(K, x)
    return polar_volume(K.translate(-x), resolution)


def classical_gradient(x, K: ConvexBody, resolution: Optional[int] = None) -> np.ndarray:
    """(n+1) times the moment integral of (K - x)°."""
    x = np.asarray(x, dtype=float)
    require_interior(K, x)
    return (K.dim + 1) * polar_centroid_integral(K.translate(-x), resolution)


# ----------------------------
# Minimization
# ----------------------------


def _interior_or_inf(f: Function, K: ConvexBody, tol: float) -> Function:
    def wrapped(x: np.ndarray) -> float:
        if interior_margin(K, x) <= tol:
            return np.inf
        return f(x)

    return wrapped


def _descend(
    f: Function,
    grad: Gradient,
    K: ConvexBody,
    x0: np.ndarray,
    tol: float,
    max_iter: int,
) -> SolveResult:
    """Gradient descent with Barzilai-Borwein trial steps and Armijo backtracking.

    Trial points outside int K are rejected by the line search. When no step
    decreases f any more (f is resolved to rounding, or its quadrature lags
    the gradient) the descent hands over to ``_gradient_root``.
    """
    safe = _interior_or_inf(f, K, S.tol)
    diam = K.diameter()
    x = np.array(x0, dtype=float)
    fx = f(x)
    g = grad(x)
    alpha = 0.1 * diam / max(np.linalg.norm(g), 1e-300)
    trace = [(x.copy(), fx)]

    for it in range(1, max_iter + 1):
        gn = float(np.linalg.norm(g))
        if gn <= tol:
            return SolveResult(x, fx, gn, it - 1, SolveStatus.converged, trace, "gradient")

        step = alpha
        accepted = False
        for _ in range(60):
            y = x - step * g
            fy = safe(y)
            if fy <= fx - 1e-4 * step * gn ** 2:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            log.info("line search exhausted at iteration %d (|g| = %.3e)", it, gn)
            return _gradient_root(f, grad, K, x, fx, g, tol, it, trace)

        gy = grad(y)
        s, d = y - x, gy - g
        sd = float(s @ d)
        alpha = float(s @ s) / sd if sd > 0 else 2.0 * step
        moved = float(np.linalg.norm(s))
        x, fx, g = y, fy, gy
        trace.append((x.copy(), fx))
        log.debug("iter %d f=%.15g |g|=%.3e step=%.3e", it, fx, gn, moved)
        if moved <= tol * max(1.0, diam) and np.linalg.norm(g) > tol:
            log.info("step below %.1e at iteration %d (|g| = %.3e)", tol, it, float(np.linalg.norm(g)))
            return _gradient_root(f, grad, K, x, fx, g, tol, it, trace)

    gn = float(np.linalg.norm(g))
    if gn <= tol:
        return SolveResult(x, fx, gn, max_iter, SolveStatus.converged, trace, "gradient")
    return SolveResult(x, fx, gn, max_iter, SolveStatus.max_iter, trace, "gradient")


def _gradient_root(
    f: Function,
    grad: Gradient,
    K: ConvexBody,
    x: np.ndarray,
    fx: float,
    g: np.ndarray,
    tol: float,
    iterations: int,
    trace: List[Tuple[np.ndarray, float]],
) -> SolveResult:
    """Solve grad = 0 from x with hybrid Powell steps (finite-difference Jacobian).

    The result is Converged only if |grad| <= tol at the returned point;
    otherwise the better of x and the root estimate is returned as MaxIter.
    """
    n = x.shape[0]
    outside = np.full(n, 1e10)

    def residual(y: np.ndarray) -> np.ndarray:
        if interior_margin(K, y) <= S.tol:
            return outside
        return grad(y)

    res = root(residual, x, method="hybr", options={"xtol": 1e-14, "maxfev": 100 * (n + 1)})
    best, best_f, gn = x, fx, float(np.linalg.norm(g))
    y = np.asarray(res.x, dtype=float)
    if interior_margin(K, y) > S.tol:
        gy = float(np.linalg.norm(grad(y)))
        if gy < gn:
            best, best_f, gn = y, f(y), gy
            trace.append((best.copy(), best_f))
    used = iterations + int(res.nfev)
    log.debug("gradient root: nfev=%d |g|=%.3e (%s)", int(res.nfev), gn, res.message)

    if gn <= tol:
        return SolveResult(best, best_f, gn, used, SolveStatus.converged, trace, "gradient")
    log.warning("gradient norm %.3e is above tol %.1e; reporting MaxIter", gn, tol)
    return SolveResult(best, best_f, gn, used, SolveStatus.max_iter, trace, "gradient")


def _ray_exit(K: ConvexBody, p: np.ndarray, d: np.ndarray) -> float:
    """Largest t with p + t d in K (d a unit vector, p interior)."""
    if isinstance(K, Polytope):
        rate = K.normals @ d
        room = K.offsets - K.normals @ p
        ahead = rate > 1e-15
        return float(np.min(room[ahead] / rate[ahead])) if ahead.any() else np.inf
    lo, hi = 0.0, K.diameter()
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if K.interior_margin(p + mid * d) > 0:
            lo = mid
        else:
            hi = mid
    return lo


def _flat_extent(f: Function, K: ConvexBody, p: np.ndarray, fp: float, d: np.ndarray) -> float:
    """Length of {t >= 0 : f(p + t d) <= f(p) + flat tolerance} (an interval by convexity)."""
    level = fp + S.flat_value_tol
    hi = _ray_exit(K, p, d) * (1.0 - 1e-6)
    if not np.isfinite(hi) or hi <= 0:
        return 0.0
    if f(p + hi * d) <= level:
        return hi
    lo = 0.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if f(p + mid * d) <= level:
            lo = mid
        else:
            hi = mid
    return lo


def detect_flat_region(
    f: Function, K: ConvexBody, p: np.ndarray, directions: Sequence[np.ndarray]
) -> Optional[Tuple[np.ndarray, np.ndarray]]:
    """Endpoints of the longest segment through p on which f stays within the
    flat tolerance of f(p), if it is at least the configured fraction of diam K."""
    f = _interior_or_inf(f, K, S.tol)
    fp = f(p)
    best = None
    best_len = 0.0
    for d in directions:
        d = normalize(d)
        forward = _flat_extent(f, K, p, fp, d)
        backward = _flat_extent(f, K, p, fp, -d)
        if forward + backward > best_len:
            best_len = forward + backward
            best = (p - backward * d, p + forward * d)
    if best is None or best_len < S.flat_length_fraction * K.diameter():
        return None
    return best


def _nelder_mead(f: Function, K: ConvexBody, x0: np.ndarray, tol: float, max_iter: int) -> SolveResult:
    """Nelder-Mead restricted to int K, restarted from the best point until it stalls."""
    safe = _interior_or_inf(f, K, S.tol)
    n = x0.shape[0]
    size = 0.1 * inradius(K)
    x = np.array(x0, dtype=float)
    fx = f(x)
    total = 0
    capped = False
    simplex = None

    for restart in range(6):
        init = np.vstack([x, x + size * np.eye(n)])
        res = minimize(
            safe,
            x,
            method="Nelder-Mead",
            options={
                "xatol": tol,
                "fatol": S.flat_value_tol,
                "maxiter": max_iter * 4,
                "initial_simplex": init,
            },
        )
        total += int(res.nit)
        capped = capped or res.status == 1
        simplex = res.final_simplex[0]
        improved = fx - float(res.fun)
        if float(res.fun) <= fx:
            x, fx = np.array(res.x, dtype=float), float(res.fun)
        log.debug("nelder-mead restart %d f=%.15g improvement=%.3e", restart, fx, improved)
        if improved <= S.flat_value_tol:
            break
        size = max(10.0 * tol, 0.1 * size)

    directions = list(np.eye(n))
    spread = simplex[-1] - simplex[0]
    if np.linalg.norm(spread) > 0:
        directions.append(spread)

    flat = detect_flat_region(f, K, x, directions)
    step = 1e-5 * inradius(K)
    if flat is not None:
        mid = 0.5 * (flat[0] + flat[1])
        value = f(mid)
        trace = [(flat[0], f(flat[0])), (flat[1], f(flat[1]))]
        gn = float(np.linalg.norm(central_difference(f, mid, step)))
        log.info("flat valley of length %.3e detected", float(np.linalg.norm(flat[1] - flat[0])))
        return SolveResult(mid, value, gn, total, SolveStatus.flat_region, trace, "nelder-mead")

    status = SolveStatus.max_iter if capped else SolveStatus.converged
    gn = float(np.linalg.norm(central_difference(f, x, step)))
    return SolveResult(x, f(x), gn, total, status, [(x.copy(), fx)], "nelder-mead")


def santalo_point(
    K: ConvexBody,
    B: Optional[ConvexBody] = None,
    tol: Optional[float] = None,
    resolution: Optional[int] = None,
    max_iter: Optional[int] = None,
    classical: bool = False,
) -> SolveResult:
    """Minimizer of x -> A_{K-x}(∂B) over int K (or of |(K-x)°| with ``classical``).

    Smooth B (and the classical functional) use gradient descent with the
    centroid gradient; polytope B uses Nelder-Mead with flat-valley detection.
    """
    tol = S.tol if tol is None else tol
    max_iter = S.max_iter if max_iter is None else max_iter
    if tol <= 0:
        raise GeometryError("solver tolerance must be positive")
    x0 = initial_point(K)

    if classical:
        result = _descend(
            lambda x: classical_objective(x, K, resolution),
            lambda x: classical_gradient(x, K, resolution),
            K,
            x0,
            tol,
            max_iter,
        )
    else:
        if B is None:
            raise GeometryError("a norm body B is required unless classical=True")
        f = HTObjective(K, B, resolution)
        if isinstance(B, SmoothBody):
            result = _descend(f, f.gradient, K, x0, tol, max_iter)
        else:
            result = _nelder_mead(f, K, x0, tol, max_iter)

    log.info(
        "santalo point %s status=%s value=%.12g iterations=%d",
        np.round(result.point, 10).tolist(),
        result.status.value,
        result.value,
        result.iterations,
    )
    return result


def classical_santalo_point(K: ConvexBody, tol: Optional[float] = None, resolution: Optional[int] = None) -> SolveResult:
    return santalo_point(K, tol=tol, resolution=resolution, classical=True)


# ----------------------------
# Strict convexity and examples
# ----------------------------


def strcvx_defect(H: LinearHyperplane, x1, x2, K: ConvexBody) -> float:
    """f_K(H, x1) + f_K(H, x2) - 2 f_K(H, (x1 + x2) / 2)."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    return (
        slice_polar_volume(K, H, x1)
        + slice_polar_volume(K, H, x2)
        - 2.0 * slice_polar_volume(K, H, 0.5 * (x1 + x2))
    )


def nonunique_example(dim: int = 2, eps0: float = 0.2) -> NonuniqueExample:
    """Square K with a cylindrical pair on the y-axis and a rhombus B whose
    facet directions slice K in translates of one chord along the pair."""
    if dim != 2:
        raise WrongDimension("the non-uniqueness construction is two-dimensional")
    if not 0 < eps0 < 0.5:
        raise GeometryError("eps0 must lie in (0, 0.5)")
    K = Polytope.from_vertices([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]])
    B = Polytope.from_vertices([[1.0, 0.0], [0.0, 0.5], [-1.0, 0.0], [0.0, -0.5]])
    x1 = np.array([0.0, -eps0])
    x2 = np.array([0.0, eps0])
    mu = surface_area_measure(B)
    defects = [strcvx_defect(LinearHyperplane(u), x1, x2, K) for u in mu.normals]
    return NonuniqueExample(K=K, B=B, segment=(x1, x2), facet_directions=mu.normals, facet_defects=defects)


def properness_probe(
    K: ConvexBody,
    B: Optional[ConvexBody],
    ray_direction,
    origin=None,
    distances: Iterable[float] = (1e-1, 1e-2, 1e-3),
    classical: bool = False,
    resolution: Optional[int] = None,
) -> PropernessProbe:
    """Objective values at the given distances (along the ray) before it leaves K."""
    d = normalize(ray_direction)
    if classical:
        f: Function = lambda x: classical_objective(x, K, resolution)  # noqa: E731
    else:
        f = HTObjective(K, B, resolution)
    if origin is None:
        origin = santalo_point(K, B, resolution=resolution, classical=classical).point
    p = np.asarray(origin, dtype=float)
    require_interior(K, p)
    exit_t = _ray_exit(K, p, d)
    samples = []
    for delta in distances:
        if delta >= exit_t:
            raise PointNotInterior(f"probe distance {delta} exceeds the ray length {exit_t:.3e}")
        samples.append((float(delta), float(f(p + (exit_t - delta) * d))))
    return PropernessProbe(origin=p, direction=d, interior_value=float(f(p)), samples=samples)


def polar_volume_blowup(B: ConvexBody, direction, ks: Iterable[int] = (10, 100, 1000)) -> List[Tuple[int, float]]:
    """|B_k°| along B_k = B - (1 - 1/k) d; diverges as the origin reaches ∂B."""
    d = np.asarray(direction, dtype=float)
    return [(int(k), float(polar_volume(B.translate(-(1.0 - 1.0 / k) * d)))) for k in ks]


def affine_point_continuity(
    B: Polytope,
    deltas: Iterable[float] = (1e-2, 1e-3, 1e-4),
    seed: Optional[int] = None,
) -> List[Tuple[float, float]]:
    """Movement of S_B(B) when the vertices of B are perturbed by delta."""
    rng = np.random.default_rng(S.seed if seed is None else seed)
    directions = normalize_rows(rng.normal(size=B.vertices.shape))
    base = santalo_point(B, B).point
    out = []
    for delta in deltas:
        moved = Polytope.from_vertices(B.vertices + delta * directions)
        out.append((float(delta), float(np.linalg.norm(santalo_point(moved, moved).point - base))))
    return out
