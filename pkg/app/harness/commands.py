import json
import logging
import os
import time
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from app.cache import get_report_store
from app.caching.keys import cache_key
from app.common.errors import InvalidConfig, UnsupportedBody
from app.convex.bodies import ConvexBody, Polytope, SmoothBody, ensure_same_dim
from app.convex.queries import interior_margin, require_interior
from app.db.duckdb import export_samples_csv
from app.db.registry import resolve_body
from app.equiaffine.queries import blaschke_normal, dual_centroid, euclidean_dual_centroid
from app.harness.checks import (
    SuiteContext,
    equiaffine_records,
    first_variation_pair,
    first_variation_resolution,
    refined_resolution,
    run_suites,
)
from app.harness.models import BodyRef, CheckRecord, Command, ExperimentConfig, Report
from app.ht.queries import (
    ht_area,
    ht_area_routes,
    ht_volume,
    isoperimetric_ratio,
    isoperimetrix_grid,
    symplectic_area_2d,
)
from app.santalo.models import SolveStatus
from app.santalo.queries import HTObjective, nonunique_example, santalo_point
from app.settings import S

log = logging.getLogger(__name__)

SAMPLE_COLUMNS = ["t", "x", "y", "value"]


def _body(ref: Optional[BodyRef], flag: str) -> ConvexBody:
    if ref is None:
        raise InvalidConfig(f"--{flag} is required for this command")
    body, _ = resolve_body(ref)
    return body


def _mixed_resolution(config: ExperimentConfig, dim: int, *bodies: ConvexBody) -> Optional[int]:
    """Planar pairs with a smooth member integrate kinked densities; they get a finer circle rule."""
    if config.resolution is not None or dim != 2:
        return config.resolution
    if all(isinstance(b, Polytope) for b in bodies):
        return None
    return max(S.circle_nodes, 2048)


def _duality_tolerance(config: ExperimentConfig, dim: int, *bodies: ConvexBody) -> float:
    if all(isinstance(b, Polytope) for b in bodies):
        return config.tolerance("duality_polytope")
    return config.tolerance("duality_smooth" if dim == 2 else "duality_smooth_3d")


def cmd_santalo(config: ExperimentConfig) -> Report:
    K = _body(config.k, "k")
    tol = config.tolerance("solver")
    if config.classical:
        result = santalo_point(K, tol=tol, resolution=config.resolution, classical=True)
    else:
        B = _body(config.b, "b")
        result = santalo_point(K, B, tol=tol, resolution=config.resolution)

    values: Dict[str, Any] = {
        "point": result.point,
        "value": result.value,
        "gradient_norm": result.gradient_norm,
        "iterations": result.iterations,
        "status": result.status.value,
        "method": result.method,
        "classical": config.classical,
    }
    if result.segment is not None:
        a, b = result.segment
        values["segment"] = [a, b]
        values["segment_length"] = float(np.linalg.norm(b - a))
    margin = interior_margin(K, result.point)
    checks = [CheckRecord.holds("santalo.point_interior", margin > 0, margin)]
    return Report.build(config, values, checks, max_iter=result.status == SolveStatus.max_iter)


def _directions(config: ExperimentConfig, n: int) -> np.ndarray:
    if config.directions is None:
        return np.vstack([np.eye(n), -np.eye(n)])
    v = np.asarray(config.directions, dtype=float)
    if v.ndim != 2 or v.shape[1] != n:
        raise InvalidConfig(f"directions must be {n}-vectors")
    if np.any(np.linalg.norm(v, axis=1) == 0):
        raise InvalidConfig("directions must be non-zero")
    return v


def cmd_first_variation(config: ExperimentConfig) -> Report:
    K = _body(config.k, "k")
    B = _body(config.b, "b")
    n = ensure_same_dim(K, B)
    if not isinstance(B, SmoothBody):
        raise UnsupportedBody("first-variation-check needs a smooth B")
    if not isinstance(K, Polytope):
        raise UnsupportedBody("first-variation-check needs a polytope K")
    require_interior(K, np.zeros(n))

    directions = _directions(config, n)
    res = first_variation_resolution(n, config.resolution)
    tol = config.tolerance("first_variation")
    (_, refinement), rows, refined = first_variation_pair("first_variation", K, B, directions, res, tol)

    checks = [CheckRecord.at_most(f"first_variation.v{i}", r["relative_error"], tol) for i, r in enumerate(rows)]
    checks.append(refinement)
    values = {
        "dual_centroid": dual_centroid(K, B, res),
        "resolution": res,
        "directions": rows,
        "max_relative_error": max(r["relative_error"] for r in rows),
        "refined_resolution": refined_resolution(n, res),
        "refined_max_relative_error": max(r["relative_error"] for r in refined),
    }
    return Report.build(config, values, checks)


def cmd_checks(config: ExperimentConfig) -> Report:
    results = run_suites(config)
    checks = [r for records in results.values() for r in records]
    values = {
        "suites": list(results),
        "failed": [r.name for r in checks if not r.passed],
    }
    return Report.build(config, values, checks)


def cmd_nonunique(config: ExperimentConfig) -> Report:
    ex = nonunique_example(2, config.eps0)
    f = HTObjective(ex.K, ex.B, config.resolution)
    x1, x2 = ex.segment
    samples = []
    for t in np.linspace(0.0, 1.0, 11):
        x = x1 + t * (x2 - x1)
        samples.append({"t": float(t), "x": float(x[0]), "y": float(x[1]), "value": f(x)})
    values = [s["value"] for s in samples]
    spread = max(values) - min(values)
    defect = max(abs(d) for d in ex.facet_defects)

    flat_tol = config.tolerance("flatness")
    checks = [
        CheckRecord.at_most("nonunique.sample_spread", spread, flat_tol),
        CheckRecord.at_most("nonunique.facet_direction_defect", defect, flat_tol),
    ]
    out = {
        "K": ex.K.vertices,
        "B": ex.B.vertices,
        "segment": [x1, x2],
        "segment_length": float(np.linalg.norm(x2 - x1)),
        "facet_directions": ex.facet_directions,
        "facet_defects": ex.facet_defects,
        "samples": samples,
    }
    return Report.build(config, out, checks)


def cmd_ht_area(config: ExperimentConfig) -> Report:
    """A_K(∂B): --k is the norm body, --b the body whose boundary is measured."""
    K = _body(config.k, "k")
    B = _body(config.b, "b")
    n = ensure_same_dim(K, B)
    res = _mixed_resolution(config, n, K, B)

    area = ht_area(B, K, res)
    values: Dict[str, Any] = {"dim": n, "area": area, "volume": ht_volume(B, K, res), "resolution": res}
    checks = []
    try:
        routes = ht_area_routes(K, B, res)
    except UnsupportedBody as e:
        log.info("polar route skipped: %s", e)
        values["polar_route"] = None
    else:
        values["polar_route"] = routes.polar_side
        checks.append(CheckRecord.at_most("ht_area.duality", routes.relative_error, _duality_tolerance(config, n, K, B)))

    if n == 2:
        symplectic = symplectic_area_2d(B, K, res)
        values["symplectic"] = symplectic
        exact = isinstance(K, Polytope) and isinstance(B, Polytope)
        tol = config.tolerance("crofton_exact" if exact else "crofton")
        checks.append(CheckRecord.at_most("ht_area.crofton", abs(symplectic - area) / area, tol))
    return Report.build(config, values, checks)


def cmd_isoperimetric(config: ExperimentConfig) -> Report:
    K = _body(config.k, "k")
    B = _body(config.b, "b")
    n = ensure_same_dim(K, B)
    result = isoperimetric_ratio(K, B, config.resolution)
    # a coarse grid keeps the report readable
    directions, support = isoperimetrix_grid(K, 64 if n == 2 else 1)
    values = {
        "ratio": result.ratio,
        "bound": result.bound,
        "area": result.area,
        "volume": result.volume,
        "isoperimetrix": {"directions": directions, "support": support},
    }
    checks = [CheckRecord.at_least("isoperimetric.ratio", result.ratio, result.bound, config.tolerance("isoperimetric"))]
    return Report.build(config, values, checks)


def cmd_equiaffine(config: ExperimentConfig) -> Report:
    B = _body(config.b, "b")
    if not isinstance(B, SmoothBody):
        raise UnsupportedBody("equiaffine-check needs a smooth B")
    rng = np.random.default_rng(config.seed)
    if config.directions is not None:
        directions = _directions(config, B.dim)
    else:
        directions = rng.normal(size=(config.count or 8, B.dim))
    ctx = SuiteContext(config=config, rng=rng)
    checks = equiaffine_records(ctx, "b", B, directions)

    nodes = []
    for u in directions:
        data = blaschke_normal(B, u)
        nodes.append(
            {
                "u": data.frame.u,
                "x": data.frame.x,
                "Xi": data.Xi,
                "alpha_density": data.alpha_density,
                "curvature_power": data.curvature_power,
            }
        )
    values: Dict[str, Any] = {"nodes": nodes}
    if config.k is not None:
        K = _body(config.k, "k")
        values["dual_centroid"] = dual_centroid(K, B, config.resolution)
        values["euclidean_dual_centroid"] = euclidean_dual_centroid(K, config.resolution)
    return Report.build(config, values, checks)


COMMANDS: Dict[str, Callable[[ExperimentConfig], Report]] = {
    Command.santalo.value: cmd_santalo,
    Command.first_variation.value: cmd_first_variation,
    Command.checks.value: cmd_checks,
    Command.nonunique.value: cmd_nonunique,
    Command.ht_area.value: cmd_ht_area,
    Command.isoperimetric.value: cmd_isoperimetric,
    Command.equiaffine.value: cmd_equiaffine,
}


def run_command(config: ExperimentConfig) -> Tuple[Report, bool]:
    """Run (or fetch from the report cache) one command; returns (report, cached)."""
    handler = COMMANDS[config.command]
    store = get_report_store()
    key = cache_key(config.command, config.echo())

    t0 = time.time()
    raw = store.get(key) if store is not None else None
    if raw is not None:
        report = Report.model_validate(json.loads(raw))
        cached = True
    else:
        report = handler(config)
        cached = False
        if store is not None:
            store.put(key, report.to_json())
    dt_ms = int((time.time() - t0) * 1000)

    log.info("%s finished: pass=%s status=%s cached=%s t_ms=%d", config.command, report.passed, report.status.value, cached, dt_ms)
    if config.timing:
        report = report.model_copy(update={"runtime_ms": dt_ms})
    return report, cached


def write_outputs(report: Report, config: ExperimentConfig) -> Optional[str]:
    """Write the report to --out (plus plot samples next to it); returns the report path."""
    if not config.out:
        return None
    target = os.path.abspath(config.out)
    os.makedirs(os.path.dirname(target), exist_ok=True)
    with open(target, "w", encoding="utf-8") as f:
        f.write(report.to_json() + "\n")
    samples = report.values.get("samples")
    if samples:
        csv_path = export_samples_csv(
            f"{config.out}.samples.csv",
            SAMPLE_COLUMNS,
            [[s[c] for c in SAMPLE_COLUMNS] for s in samples],
        )
        log.info("wrote %d samples to %s", len(samples), csv_path)
    return target
