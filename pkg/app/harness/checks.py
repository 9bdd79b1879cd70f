"""Randomized property suites run by the ``checks`` command.

Each suite draws its bodies from its own generator seeded with
(seed, suite index), so selecting a subset of suites does not change the
instances any single suite sees. Suites report worst cases, not one record
per instance.
"""

import logging
from dataclasses import dataclass
from math import pi
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.common.linalg import det_with_frame, normalize, normalize_rows
from app.convex.bodies import Polytope, SmoothBody
from app.convex.queries import interior_margin
from app.equiaffine.models import TangentFrame
from app.equiaffine.queries import (
    L_matrix,
    L_value,
    blaschke_normal,
    dual_centroid,
    equiaffine_residuals,
    tangent_frame,
)
from app.harness.models import CheckRecord, ExperimentConfig, Suite
from app.harness.random_bodies import random_ellipsoid, random_linear_map, random_polytope, random_smooth
from app.ht.models import HTConstants
from app.ht.queries import (
    continuity_probe,
    ht_area,
    ht_area_dual,
    ht_area_routes,
    ht_volume,
    isoperimetric_ratio,
    symplectic_area_2d,
)
from app.santalo.queries import (
    HTObjective,
    affine_point_continuity,
    central_difference,
    classical_gradient,
    classical_objective,
    classical_santalo_point,
    polar_volume_blowup,
    properness_probe,
    santalo_point,
)
from app.settings import S

log = logging.getLogger(__name__)

SQUARE = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]]
RIGHT_TRIANGLE = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]
CUBE = [[x, y, z] for x in (-1.0, 1.0) for y in (-1.0, 1.0) for z in (-1.0, 1.0)]


@dataclass
class SuiteContext:
    config: ExperimentConfig
    rng: np.random.Generator

    def count(self, default: int) -> int:
        return self.config.count or default

    def tol(self, name: str) -> float:
        return self.config.tolerance(name)

    def resolution(self, dim: int) -> Optional[int]:
        """--resolution sizes the circle rule; 3D suites keep the configured icosphere level."""
        return self.config.resolution if dim == 2 else None

    def unit(self, dim: int) -> np.ndarray:
        return normalize(self.rng.normal(size=dim))


def _dim(i: int) -> int:
    return 2 if i % 2 == 0 else 3


def _worst(values: Sequence[float]) -> float:
    return float(max(values)) if values else 0.0


# ----------------------------
# First variation
# ----------------------------

# default circle rule for planar first-variation runs
FIRST_VARIATION_NODES = 2048


def first_variation_resolution(dim: int, resolution: Optional[int]) -> Optional[int]:
    if resolution is not None or dim != 2:
        return resolution
    return max(S.circle_nodes, FIRST_VARIATION_NODES)


def refined_resolution(dim: int, resolution: Optional[int]) -> int:
    """Next rule up: twice the circle nodes, or one more icosphere level."""
    if dim == 2:
        return 2 * (resolution or S.circle_nodes)
    return min((resolution or S.sphere_level) + 1, 7)


def first_variation_errors(
    K: Polytope, B: SmoothBody, directions: np.ndarray, resolution: Optional[int]
) -> List[Dict[str, Any]]:
    """Central differences of t -> A_{B°}(∂(K - t v)°) against ((n+1) / eps_{n-1}) <C_B(K*), v>.

    Errors are relative to the directional derivative, floored at a tenth of
    the gradient norm for directions nearly orthogonal to the gradient.
    """
    n = K.dim
    scale = (n + 1) / HTConstants.eps(n - 1)
    C = dual_centroid(K, B, resolution)
    floor = 0.1 * scale * float(np.linalg.norm(C))
    h = 1e-4 * interior_margin(K, np.zeros(n))
    rows = []
    for v in directions:
        fd = (ht_area_dual(K.translate(-h * v), B, resolution) - ht_area_dual(K.translate(h * v), B, resolution)) / (2.0 * h)
        formula = scale * float(C @ v)
        err = abs(formula - fd) / max(abs(formula), abs(fd), floor, 1e-300)
        rows.append({"v": v, "finite_difference": fd, "centroid_formula": formula, "relative_error": err})
    return rows


def refinement_record(name: str, coarse: float, fine: float, tol: float) -> CheckRecord:
    """The error shrinks as the rule doubles, or both sit well under tol."""
    return CheckRecord.holds(name, fine <= max(coarse, 0.1 * tol), [coarse, fine])


def first_variation_pair(
    name: str, K: Polytope, B: SmoothBody, directions: np.ndarray, resolution: Optional[int], tol: float
) -> Tuple[List[CheckRecord], List[Dict[str, Any]], List[Dict[str, Any]]]:
    rows = first_variation_errors(K, B, directions, resolution)
    refined = first_variation_errors(K, B, directions, refined_resolution(K.dim, resolution))
    coarse = _worst([r["relative_error"] for r in rows])
    fine = _worst([r["relative_error"] for r in refined])
    records = [
        CheckRecord.at_most(f"{name}.max_relative_error", coarse, tol),
        refinement_record(f"{name}.refinement", coarse, fine, tol),
    ]
    return records, rows, refined


# ----------------------------
# Suites
# ----------------------------


def anchors(ctx: SuiteContext) -> List[CheckRecord]:
    disc = SmoothBody.ball(2)
    square = Polytope.from_vertices(SQUARE)
    res = ctx.resolution(2)
    return [
        CheckRecord.close("anchors.ht_area_disc", ht_area(disc, disc, res), 2.0 * pi, ctx.tol("anchor_area_disc"), relative=False),
        CheckRecord.close("anchors.ht_area_square", ht_area(square, square), 8.0, ctx.tol("anchor_area_square"), relative=False),
        CheckRecord.close("anchors.ht_volume_disc", ht_volume(disc, disc, res), pi, ctx.tol("anchor_volume_disc"), relative=False),
    ]


def duality(ctx: SuiteContext) -> List[CheckRecord]:
    """A_{B°}(∂K°) = A_K(∂B) through both routes."""
    out = []
    for dim, default in ((2, 50), (3, 20)):
        errors = [
            ht_area_routes(random_polytope(ctx.rng, dim), random_polytope(ctx.rng, dim)).relative_error
            for _ in range(ctx.count(default))
        ]
        out.append(CheckRecord.at_most(f"duality.polytope_{dim}d.max_relative_error", _worst(errors), ctx.tol("duality_polytope")))

    # mixed pairs: smooth B against a polytope norm, and a centered ellipsoid norm against a polytope B
    for dim in (2, 3):
        res = (ctx.config.resolution or 2048) if dim == 2 else None
        errors = []
        for _ in range(ctx.count(5)):
            errors.append(ht_area_routes(random_polytope(ctx.rng, dim), random_smooth(ctx.rng, dim), res).relative_error)
            errors.append(ht_area_routes(random_ellipsoid(ctx.rng, dim), random_polytope(ctx.rng, dim), res).relative_error)
        tol = ctx.tol("duality_smooth") if dim == 2 else ctx.tol("duality_smooth_3d")
        out.append(CheckRecord.at_most(f"duality.mixed_{dim}d.max_relative_error", _worst(errors), tol))
    return out


def crofton(ctx: SuiteContext) -> List[CheckRecord]:
    """Symplectic double integral against the slice formula in the plane."""
    exact, mixed = [], []
    res = ctx.resolution(2)
    for i in range(ctx.count(20)):
        if i % 2 == 0:
            M, B = random_polytope(ctx.rng, 2), random_polytope(ctx.rng, 2)
            target = exact
        elif i % 4 == 1:
            M, B = random_smooth(ctx.rng, 2), random_polytope(ctx.rng, 2)
            target = mixed
        else:
            M, B = random_polytope(ctx.rng, 2), random_smooth(ctx.rng, 2)
            target = mixed
        area = ht_area(M, B, res)
        target.append(abs(symplectic_area_2d(M, B, res) - area) / area)
    return [
        CheckRecord.at_most("crofton.polygon_pairs.max_relative_error", _worst(exact), ctx.tol("crofton_exact")),
        CheckRecord.at_most("crofton.mixed_pairs.max_relative_error", _worst(mixed), ctx.tol("crofton")),
    ]


def classical(ctx: SuiteContext) -> List[CheckRecord]:
    """(n+1) <c((K-x)°), v> against central differences; gradient of the HT objective; triangle point."""
    errors = []
    for i in range(ctx.count(20)):
        dim = _dim(i)
        K = random_polytope(ctx.rng, dim)
        x = 0.5 * interior_margin(K, np.zeros(dim)) * ctx.unit(dim)
        v = ctx.unit(dim)
        g = classical_gradient(x, K)
        h = 1e-4 * interior_margin(K, x)
        fd = (classical_objective(x + h * v, K) - classical_objective(x - h * v, K)) / (2.0 * h)
        errors.append(abs(fd - g @ v) / np.linalg.norm(g))

    ht_errors = []
    for _ in range(ctx.count(4)):
        K, B = random_polytope(ctx.rng, 2), random_smooth(ctx.rng, 2)
        f = HTObjective(K, B, ctx.resolution(2))
        x = 0.3 * interior_margin(K, np.zeros(2)) * ctx.unit(2)
        fd = central_difference(f, x, 1e-4 * interior_margin(K, x))
        ht_errors.append(float(np.linalg.norm(f.gradient(x) - fd) / max(np.linalg.norm(fd), 1e-8 * f(x))))

    point = classical_santalo_point(Polytope.from_vertices(RIGHT_TRIANGLE), tol=ctx.tol("solver")).point
    return [
        CheckRecord.at_most("classical.derivative.max_relative_error", _worst(errors), ctx.tol("classical_gradient")),
        CheckRecord.at_most("classical.ht_gradient.max_relative_error", _worst(ht_errors), ctx.tol("first_variation")),
        CheckRecord(
            name="classical.right_triangle_point",
            computed=point,
            expected=[1.0 / 3.0, 1.0 / 3.0],
            tolerance=ctx.tol("classical_point"),
            passed=bool(np.linalg.norm(point - 1.0 / 3.0) <= ctx.tol("classical_point")),
        ),
    ]


def isoperimetric(ctx: SuiteContext) -> List[CheckRecord]:
    ratios: Dict[int, List[float]] = {2: [], 3: []}
    for i in range(ctx.count(50)):
        dim = _dim(i)
        r = isoperimetric_ratio(random_polytope(ctx.rng, dim), random_polytope(ctx.rng, dim))
        ratios[dim].append(r.ratio)
    out = [
        CheckRecord.close("isoperimetric.bound_2d", HTConstants.isoperimetric_bound(2), 32.0 / pi, 1e-14),
    ]
    for dim, values in ratios.items():
        if values:
            out.append(
                CheckRecord.at_least(
                    f"isoperimetric.min_ratio_{dim}d",
                    min(values),
                    HTConstants.isoperimetric_bound(dim),
                    ctx.tol("isoperimetric"),
                )
            )
    return out


def _segment_through_origin(ctx: SuiteContext, K: Polytope):
    """Two interior points 0.1 * diam K apart, symmetric about the origin."""
    d = ctx.unit(K.dim)
    s = 0.05 * K.diameter()
    return s * d, -s * d


def _defect(f: Callable[[np.ndarray], float], x1: np.ndarray, x2: np.ndarray) -> float:
    return f(x1) + f(x2) - 2.0 * f(0.5 * (x1 + x2))


def convexity(ctx: SuiteContext) -> List[CheckRecord]:
    midpoint = []
    for i in range(ctx.count(100)):
        dim = _dim(i)
        K = random_polytope(ctx.rng, dim)
        B = random_polytope(ctx.rng, dim) if i % 4 < 2 else random_smooth(ctx.rng, dim)
        f = HTObjective(K, B, ctx.resolution(dim))
        r = 0.6 * interior_margin(K, np.zeros(dim))
        x1 = r * ctx.rng.uniform() * ctx.unit(dim)
        x2 = r * ctx.rng.uniform() * ctx.unit(dim)
        midpoint.append(_defect(f, x1, x2))

    strict = []
    for i in range(ctx.count(20)):
        dim = _dim(i)
        K = random_polytope(ctx.rng, dim)
        B = SmoothBody.ball(dim) if i % 4 < 2 else random_ellipsoid(ctx.rng, dim)
        strict.append(_defect(HTObjective(K, B, ctx.resolution(dim)), *_segment_through_origin(ctx, K)))

    same = []
    for i in range(ctx.count(20)):
        K = Polytope.from_vertices(SQUARE) if i % 4 == 0 else random_polytope(ctx.rng, _dim(i))
        same.append(_defect(HTObjective(K, K), *_segment_through_origin(ctx, K)))

    return [
        CheckRecord.at_least("convexity.midpoint.min_defect", min(midpoint), 0.0, ctx.tol("convexity")),
        CheckRecord.at_least("convexity.smooth_b.min_defect", min(strict), ctx.tol("strict")),
        CheckRecord.at_least("convexity.k_equals_b.min_defect", min(same), ctx.tol("flatness")),
    ]


def equivariance(ctx: SuiteContext) -> List[CheckRecord]:
    """S_{TB}(TB) = T S_B(B) for affine T, and A_{TK}(∂TB) = A_K(∂B) for linear T."""
    bodies = [
        Polytope.from_vertices(SQUARE),
        Polytope.from_vertices(RIGHT_TRIANGLE),
        random_polytope(ctx.rng, 2),
        random_polytope(ctx.rng, 2),
        random_polytope(ctx.rng, 3),
    ]
    tol = ctx.tol("solver")
    errors = []
    for P in bodies:
        base = santalo_point(P, P, tol=tol).point
        for _ in range(ctx.count(4)):
            T = random_linear_map(ctx.rng, P.dim)
            t = ctx.rng.uniform(-1.0, 1.0, size=P.dim)
            image = P.affine_map(T, t)
            moved = santalo_point(image, image, tol=tol).point
            errors.append(float(np.linalg.norm(moved - (T @ base + t)) / image.diameter()))

    areas = []
    for i in range(ctx.count(10)):
        dim = _dim(i)
        K, B = random_polytope(ctx.rng, dim), random_polytope(ctx.rng, dim)
        T = random_linear_map(ctx.rng, dim)
        a = ht_area(B, K)
        areas.append(abs(ht_area(B.linear_map(T), K.linear_map(T)) - a) / a)

    return [
        CheckRecord.at_most("equivariance.affine_point.max_relative_error", _worst(errors), ctx.tol("equivariance")),
        CheckRecord.at_most("equivariance.ht_area.max_relative_error", _worst(areas), ctx.tol("invariance")),
    ]


def properness(ctx: SuiteContext) -> List[CheckRecord]:
    square = Polytope.from_vertices(SQUARE)
    cube = Polytope.from_vertices(CUBE)
    probes = {
        "classical_square_edge": properness_probe(square, None, [1.0, 0.0], origin=np.zeros(2), classical=True),
        "classical_cube_face": properness_probe(cube, None, [0.0, 0.0, 1.0], origin=np.zeros(3), classical=True),
        "ht_square_diagonal": properness_probe(square, square, [1.0, 1.0], origin=np.zeros(2)),
    }
    growth = ctx.tol("properness_growth")
    out = []
    for name, probe in probes.items():
        out.append(CheckRecord.holds(f"properness.{name}.increasing", probe.increasing, [v for _, v in probe.samples]))
        out.append(CheckRecord.at_least(f"properness.{name}.growth", probe.growth, growth))

    blowup = polar_volume_blowup(square, [1.0, 0.0])
    values = [v for _, v in blowup]
    out.append(CheckRecord.holds("properness.polar_blowup.increasing", all(b > a for a, b in zip(values, values[1:])), values))
    out.append(CheckRecord.at_least("properness.polar_blowup.growth", values[-1] / values[0], growth))
    return out


def _random_tangent_basis(ctx: SuiteContext, frame: TangentFrame) -> np.ndarray:
    m = frame.basis.shape[1]
    while True:
        A = np.eye(m) + 0.5 * ctx.rng.normal(size=(m, m))
        if np.linalg.det(A) > 0.1:
            return frame.basis @ A


def equiaffine_records(ctx: SuiteContext, name: str, B: SmoothBody, directions: np.ndarray) -> List[CheckRecord]:
    """Conditions of the Blaschke normal, the L identity and its scaling law at the given normals."""
    n = B.dim
    tangency, volume, identity, symmetry, scaling, metric = [], [], [], [], [], []
    collinear = []
    for u in normalize_rows(directions):
        res = equiaffine_residuals(B, u)
        tangency.append(res.tangency)
        volume.append(res.volume_condition)
        metric.append(res.metric_min_eigenvalue)
        if B.is_centered_ellipsoid():
            collinear.append(res.collinearity)

        frame = tangent_frame(B, u)
        frame = tangent_frame(B, u, _random_tangent_basis(ctx, frame))
        data = blaschke_normal(B, u, frame)
        L = L_matrix(frame, B)
        target = det_with_frame(data.Xi, frame.basis) ** (n + 1)
        identity.append(abs(np.linalg.det(L) - target) / abs(target))
        symmetry.append(float(np.abs(L - L.T).max() / np.abs(L).max()))
        factors = ctx.rng.uniform(0.5, 2.0, size=n - 1)
        scaled = L_value(frame.scaled(factors), B)
        expected = np.prod(factors ** (n + 1)) * np.linalg.det(L)
        scaling.append(abs(scaled - expected) / abs(expected))

    tol = ctx.tol("equiaffine")
    out = [
        CheckRecord.at_most(f"equiaffine.{name}.tangency", _worst(tangency), tol),
        CheckRecord.at_most(f"equiaffine.{name}.volume_condition", _worst(volume), tol),
        CheckRecord.at_least(f"equiaffine.{name}.metric_min_eigenvalue", min(metric), 0.0),
        CheckRecord.at_most(f"equiaffine.{name}.L_identity", _worst(identity), tol),
        CheckRecord.at_most(f"equiaffine.{name}.L_symmetry", _worst(symmetry), ctx.tol("symmetry")),
        CheckRecord.at_most(f"equiaffine.{name}.L_scaling", _worst(scaling), ctx.tol("scaling")),
    ]
    if collinear:
        out.append(CheckRecord.at_most(f"equiaffine.{name}.collinearity", _worst(collinear), tol))
    return out


def equiaffine(ctx: SuiteContext) -> List[CheckRecord]:
    bodies = {
        "disc": SmoothBody.ball(2),
        "ellipse12": SmoothBody.ellipsoid(np.diag([1.0, 2.0])),
        "perturbed2": SmoothBody.perturbed_ball(2, 0.05),
        "ball3": SmoothBody.ball(3),
        "ellipsoid123": SmoothBody.ellipsoid(np.diag([1.0, 2.0, 3.0])),
        "perturbed3": SmoothBody.perturbed_ball(3, 0.03),
    }
    out = []
    for name, B in bodies.items():
        directions = ctx.rng.normal(size=(ctx.count(5), B.dim))
        out.extend(equiaffine_records(ctx, name, B, directions))

    # closed forms: Xi(x) = -x on the unit sphere, -2^{-4/3} x on the circle of radius 2
    tol = ctx.tol("equiaffine")
    for name, B, factor in (("ball3", SmoothBody.ball(3), 1.0), ("circle_r2", SmoothBody.ball(2, 2.0), 2.0 ** (-4.0 / 3.0))):
        gaps = []
        for u in normalize_rows(ctx.rng.normal(size=(ctx.count(5), B.dim))):
            data = blaschke_normal(B, u)
            gaps.append(float(np.linalg.norm(data.Xi + factor * data.frame.x)))
        out.append(CheckRecord.at_most(f"equiaffine.{name}.closed_form", _worst(gaps), tol))

    # the dual centroid does not depend on the boundary measure
    K = Polytope.from_vertices(SQUARE).translate([-0.3, -0.1])
    B = SmoothBody.ellipsoid(np.diag([1.0, 2.0]))
    plain = dual_centroid(K, B, ctx.resolution(2))
    weighted = dual_centroid(K, B, ctx.resolution(2), mu_density=lambda u: 1.0 + 0.5 * u[:, 0] ** 2)
    out.append(
        CheckRecord.at_most(
            "equiaffine.dual_centroid.mu_independence",
            float(np.linalg.norm(weighted - plain) / np.linalg.norm(plain)),
            ctx.tol("mu_independence"),
        )
    )
    return out


def continuity(ctx: SuiteContext) -> List[CheckRecord]:
    """HT area and the affine-invariant point under vertex perturbations of shrinking size."""
    K = random_polytope(ctx.rng, 2)
    B = random_polytope(ctx.rng, 2)
    seed = int(ctx.rng.integers(2 ** 31))
    area = [d for _, d in continuity_probe(K, B, deltas=(1e-3, 1e-4, 1e-5), seed=seed)]
    point = [d for _, d in affine_point_continuity(B, deltas=(1e-2, 1e-3, 1e-4), seed=seed)]
    return [
        CheckRecord.holds("continuity.ht_area.decreasing", all(b < a for a, b in zip(area, area[1:])), area),
        CheckRecord.holds("continuity.affine_point.decreasing", all(b < a for a, b in zip(point, point[1:])), point),
    ]


def first_variation(ctx: SuiteContext) -> List[CheckRecord]:
    """Centroid formula against finite differences for every norm/body pair, v = ±e_i."""
    tol = ctx.tol("first_variation")
    norms = {
        2: {"disc": SmoothBody.ball(2), "ellipse12": SmoothBody.ellipsoid(np.diag([1.0, 2.0])), "perturbed2": SmoothBody.perturbed_ball(2, 0.05)},
        3: {"ball3": SmoothBody.ball(3), "perturbed3": SmoothBody.perturbed_ball(3, 0.05)},
    }
    bodies = {
        2: {"shifted_square": Polytope.from_vertices(SQUARE).translate([-0.3, -0.1])},
        3: {"shifted_cube": Polytope.from_vertices(CUBE).translate([-0.2, -0.1, 0.15])},
    }
    for dim in (2, 3):
        for i in range(ctx.count(1)):
            bodies[dim][f"random{i}"] = random_polytope(ctx.rng, dim)

    out = []
    for dim in (2, 3):
        directions = np.vstack([np.eye(dim), -np.eye(dim)])
        res = first_variation_resolution(dim, ctx.resolution(dim))
        for b_name, B in norms[dim].items():
            for k_name, K in bodies[dim].items():
                records, _, _ = first_variation_pair(f"first_variation.{k_name}.{b_name}", K, B, directions, res, tol)
                out.extend(records)
    return out


SUITES: Dict[str, Callable[[SuiteContext], List[CheckRecord]]] = {
    Suite.anchors.value: anchors,
    Suite.duality.value: duality,
    Suite.crofton.value: crofton,
    Suite.classical.value: classical,
    Suite.isoperimetric.value: isoperimetric,
    Suite.convexity.value: convexity,
    Suite.equivariance.value: equivariance,
    Suite.properness.value: properness,
    Suite.equiaffine.value: equiaffine,
    Suite.continuity.value: continuity,
    Suite.first_variation.value: first_variation,
}


def run_suites(config: ExperimentConfig) -> Dict[str, List[CheckRecord]]:
    selected = list(config.suites) or list(SUITES)
    results: Dict[str, List[CheckRecord]] = {}
    for name in SUITES:
        if name not in selected:
            continue
        index = list(SUITES).index(name)
        ctx = SuiteContext(config=config, rng=np.random.default_rng([config.seed, index]))
        records = SUITES[name](ctx)
        for r in records:
            if r.passed:
                log.info("%s passed (computed=%s)", r.name, r.computed)
            else:
                log.warning("%s FAILED (computed=%s expected=%s bound=%s)", r.name, r.computed, r.expected, r.bound)
        results[name] = records
    return results
