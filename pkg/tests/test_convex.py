import json
from math import pi, sqrt

import numpy as np
import pytest

from app.common.errors import (
    DegenerateBody,
    DimensionMismatch,
    InvalidBodySpec,
    InvalidConfig,
    OriginNotInterior,
    UnsupportedBody,
    WrongDimension,
    ZeroDirection,
)
from app.common.linalg import normalize, unit_ball_volume
from app.common.sphere import icosphere_nodes, sphere_quadrature
from app.convex.bodies import Polytope, SmoothBody, ensure_same_dim
from app.convex.models import BodySpec, LinearHyperplane
from app.convex.queries import (
    body_volume,
    centroid_integral,
    inradius,
    monte_carlo_moments,
    polar,
    polar_volume,
    project_onto_hyperplane,
    projection_moment,
    projection_volume,
    slice_polar_volume,
    surface_area_measure,
    volume,
    volume_estimate,
)
from app.db.registry import load_registry, resolve_body, resolve_spec
from app.harness.random_bodies import random_polytope


def test_unit_ball_volumes():
    assert unit_ball_volume(1) == pytest.approx(2.0)
    assert unit_ball_volume(2) == pytest.approx(pi)
    assert unit_ball_volume(3) == pytest.approx(4.0 * pi / 3.0)


def test_normalize_rejects_zero():
    with pytest.raises(ZeroDirection):
        normalize(np.zeros(3))


def test_sphere_rules_integrate_constants_and_quadratics():
    u, w = sphere_quadrature(2)
    assert w.sum() == pytest.approx(2.0 * pi, abs=1e-12)
    u, w = sphere_quadrature(3, 3)
    assert w.sum() == pytest.approx(4.0 * pi, abs=1e-9)
    assert (w * u[:, 2] ** 2).sum() == pytest.approx(4.0 * pi / 3.0, rel=1e-3)
    assert icosphere_nodes(2)[0].shape == (162, 3)


def test_sphere_rule_bad_resolution():
    with pytest.raises(InvalidConfig):
        sphere_quadrature(2, 2)
    with pytest.raises(InvalidConfig):
        sphere_quadrature(3, 9)
    with pytest.raises(WrongDimension):
        sphere_quadrature(4)


def test_square_volume_and_centroid(square, triangle, cube):
    assert volume(square) == pytest.approx(4.0, abs=1e-12)
    assert np.allclose(centroid_integral(square), 0.0, atol=1e-12)
    assert volume(triangle) == pytest.approx(0.5, abs=1e-12)
    assert np.allclose(centroid_integral(triangle), [1.0 / 6.0, 1.0 / 6.0], atol=1e-12)
    assert volume(cube) == pytest.approx(8.0, abs=1e-12)


def test_from_vertices_prunes_non_extreme_points():
    P = Polytope.from_vertices([[-1, -1], [1, -1], [1, 1], [-1, 1], [0, 0], [1, 0], [0.2, 0.3]])
    assert P.vertices.shape == (4, 2)
    assert P.facet_areas.sum() == pytest.approx(8.0)
    assert P.representation_residual() <= 1e-12


def test_from_vertices_degenerate_inputs():
    with pytest.raises(DegenerateBody):
        Polytope.from_vertices([[0, 0], [1, 1], [2, 2]])
    with pytest.raises(WrongDimension):
        Polytope.from_vertices(np.eye(5))


def test_support_is_vectorized(square):
    u = np.array([[1.0, 0.0], [1.0, 1.0]]) / np.array([[1.0], [sqrt(2.0)]])
    assert np.allclose(square.support(u), [1.0, sqrt(2.0)])
    assert square.support([0.0, 1.0]) == pytest.approx(1.0)


def test_polar_of_square_is_the_cross(square):
    P = polar(square)
    assert volume(P) == pytest.approx(2.0, abs=1e-12)
    back = polar(P)
    assert volume(back) == pytest.approx(4.0, abs=1e-12)
    assert np.allclose(np.sort(back.vertices, axis=0), np.sort(square.vertices, axis=0))


def test_polar_needs_interior_origin(square):
    with pytest.raises(OriginNotInterior):
        polar(square.translate([1.0, 0.0]))


def test_polar_of_smooth_bodies(ellipse12):
    P = polar(ellipse12)
    assert P.support([1.0, 0.0]) == pytest.approx(1.0)
    assert P.support([0.0, 1.0]) == pytest.approx(sqrt(2.0))
    with pytest.raises(UnsupportedBody):
        polar(SmoothBody.perturbed_ball(2, 0.05))
    with pytest.raises(UnsupportedBody):
        polar(ellipse12.translate([0.1, 0.0]))


def test_smooth_volumes(disc):
    ellipse = SmoothBody.ellipsoid(np.diag([1.0, 4.0]))
    assert body_volume(disc) == pytest.approx(pi, abs=1e-12)
    assert body_volume(ellipse) == pytest.approx(pi / 2.0, rel=1e-10)
    assert polar_volume(ellipse) == pytest.approx(2.0 * pi, rel=1e-10)


def test_perturbed_ball_must_stay_convex():
    SmoothBody.perturbed_ball(2, 0.05)
    with pytest.raises(InvalidBodySpec):
        SmoothBody.perturbed_ball(2, 0.5)


def test_surface_area_measure(square, disc, cube):
    mu = surface_area_measure(square)
    assert mu.atomic
    assert len(mu.normals) == 2
    assert np.allclose(mu.weights, [4.0, 4.0])
    assert surface_area_measure(cube).total_mass == pytest.approx(24.0)
    assert surface_area_measure(disc).total_mass == pytest.approx(2.0 * pi, abs=1e-12)


def test_linear_hyperplane_is_unoriented():
    a = LinearHyperplane(np.array([-1.0, 0.0]))
    b = LinearHyperplane(np.array([2.0, 0.0]))
    assert np.allclose(a.normal, [1.0, 0.0])
    assert a.same_as(b)


def test_projection_volume_matches_explicit_projection(rng):
    P = random_polytope(rng, 3)
    for _ in range(5):
        H = LinearHyperplane(rng.normal(size=3))
        assert projection_volume(P, H) == pytest.approx(volume(project_onto_hyperplane(P, H)), rel=1e-10)


def test_projection_volume_of_ball(ball3):
    assert projection_volume(ball3, LinearHyperplane(np.array([0.0, 0.0, 1.0]))) == pytest.approx(pi, rel=1e-10)


def test_projection_moment_of_shifted_square(shifted_square):
    m = projection_moment(shifted_square, np.array([1.0, 0.0]))
    # projection onto the y-axis is [-1.1, 0.9]
    assert np.allclose(m, [0.0, (0.9 ** 2 - 1.1 ** 2) / 2.0], atol=1e-12)


def test_monte_carlo_agrees_with_exact(cube):
    shifted = cube.translate([0.5, 0.0, 0.0])
    mc = monte_carlo_moments(shifted, samples=100_000, seed=3)
    assert abs(mc.volume - 8.0) <= 5.0 * mc.volume_stderr + 1e-12
    assert np.all(np.abs(mc.moment - centroid_integral(shifted)) <= 5.0 * mc.moment_stderr + 1e-12)


def test_slice_polar_volume_polytope_and_disc(square, disc):
    H = LinearHyperplane(np.array([1.0, 0.0]))
    assert slice_polar_volume(square, H, np.zeros(2)) == pytest.approx(2.0)
    assert slice_polar_volume(disc, H, np.zeros(2)) == pytest.approx(2.0)


def test_slice_polar_volume_off_center(disc, ball3):
    x = np.array([0.3, -0.2])
    nu = normalize(np.array([1.0, 2.0]))
    expected = 2.0 * sqrt(1.0 - (x @ nu) ** 2) / (1.0 - x @ x)
    assert slice_polar_volume(disc, LinearHyperplane(nu), x) == pytest.approx(expected, rel=1e-10)

    x = np.array([0.2, 0.1, -0.3])
    nu = normalize(np.array([0.0, 1.0, 1.0]))
    expected = pi * sqrt(1.0 - (x @ nu) ** 2) / (1.0 - x @ x) ** 1.5
    assert slice_polar_volume(ball3, LinearHyperplane(nu), x) == pytest.approx(expected, rel=1e-8)


def test_inradius(square, disc):
    assert inradius(square) == pytest.approx(1.0)
    assert inradius(disc) == pytest.approx(1.0)


def test_dimension_mismatch(square, ball3):
    with pytest.raises(DimensionMismatch):
        ensure_same_dim(square, ball3)


def test_body_spec_parsing():
    spec = BodySpec.parse({"type": "ball", "dim": 3})
    assert spec.radius == 1.0
    with pytest.raises(InvalidBodySpec):
        BodySpec.parse({"type": "polytope"})
    with pytest.raises(InvalidBodySpec):
        BodySpec.parse({"type": "ball", "colour": "red"})

    body = BodySpec.parse(
        {"type": "polytope", "vertices": [[-1, -1], [1, -1], [1, 1], [-1, 1]], "linear": [[2, 0], [0, 1]], "center": [1, 0]}
    ).to_body()
    assert body.support([1.0, 0.0]) == pytest.approx(3.0)
    assert body.support([-1.0, 0.0]) == pytest.approx(1.0)


def test_registry_resolution(tmp_path):
    registry = load_registry()
    assert {"square", "disc", "triangle", "cube", "ball3", "perturbed2"} <= set(registry)

    body, spec = resolve_body("square")
    assert isinstance(body, Polytope)
    assert resolve_spec('{"type": "ball"}').type.value == "ball"

    path = tmp_path / "tri.json"
    path.write_text(json.dumps({"type": "polytope", "vertices": [[0, 0], [1, 0], [0, 1]]}))
    assert volume(resolve_body(str(path))[0]) == pytest.approx(0.5)

    with pytest.raises(InvalidBodySpec):
        resolve_spec("no-such-body")
    with pytest.raises(InvalidBodySpec):
        resolve_spec("{not json")


def test_polar_is_an_involution(cube):
    T = Polytope.from_vertices([[2.0, 0.0], [0.0, 2.0], [-1.0, -1.0]])
    back = polar(polar(T))
    assert volume(back) == pytest.approx(volume(T), rel=1e-12)
    assert np.allclose(np.sort(back.vertices, axis=0), np.sort(T.vertices, axis=0))

    octahedron = polar(cube)
    assert octahedron.vertices.shape == (6, 3)
    assert volume(octahedron) == pytest.approx(4.0 / 3.0, rel=1e-12)


@pytest.mark.parametrize("body", [SmoothBody.ellipsoid(np.diag([1.0, 4.0])), SmoothBody.perturbed_ball(3, 0.03)])
def test_support_is_positively_homogeneous(body, rng):
    u = rng.normal(size=(5, body.dim))
    assert np.allclose(body.support(3.5 * u), 3.5 * body.support(u))
    assert np.allclose(body.support_grad(3.5 * u), body.support_grad(u))


@pytest.mark.parametrize("gap", [1e-3, 1e-5, 1e-7])
def test_polar_near_a_facet_is_long_not_flat(cube, gap):
    # (cube - x)° for x at distance gap below the top face
    P = polar(cube.translate([0.0, 0.0, -(1.0 - gap)]))
    assert P.vertices.shape == (6, 3)
    assert volume(P) == pytest.approx(2.0 / 3.0 * (1.0 / gap + 1.0 / (2.0 - gap)), rel=1e-9)


def test_thin_but_full_dimensional_hulls():
    sliver = Polytope.from_vertices([[0.0, 0.0], [1e3, 0.0], [1e3, 1e-3], [0.0, 1e-3]])
    assert volume(sliver) == pytest.approx(1.0, rel=1e-9)
    with pytest.raises(DegenerateBody):
        Polytope.from_vertices([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 1e-14]])


def test_volume_estimate_reports_its_error_bar(cube):
    exact = volume_estimate(cube)
    assert exact.value == pytest.approx(8.0) and exact.stderr == 0.0

    cross = Polytope.from_vertices(np.vstack([np.eye(4), -np.eye(4)]))
    est = volume_estimate(cross)
    assert est.stderr > 0
    assert abs(est.value - 2.0 / 3.0) <= 5 * est.stderr
    assert volume(cross) == est.value
