import numpy as np
import pytest
from scipy.optimize import minimize

from app.common.errors import GeometryError, PointNotInterior, WrongDimension
from app.convex.bodies import Polytope, SmoothBody
from app.convex.models import LinearHyperplane
from app.convex.queries import interior_margin
from app.ht.queries import ht_area
from app.santalo.models import SolveStatus
from app.santalo.queries import (
    HTObjective,
    central_difference,
    classical_gradient,
    classical_objective,
    classical_santalo_point,
    gradient,
    nonunique_example,
    objective,
    polar_volume_blowup,
    properness_probe,
    santalo_point,
    strcvx_defect,
)
from app.settings import S


def test_objective_at_origin_is_the_area(square, disc):
    assert objective(np.zeros(2), square, disc) == pytest.approx(ht_area(disc, square), rel=1e-12)


def test_objective_is_translation_equivariant(square, shifted_square, disc):
    t = np.array([-0.3, -0.1])
    x = np.array([0.2, 0.05])
    assert objective(x + t, shifted_square, disc) == pytest.approx(objective(x, square, disc), rel=1e-10)


def test_objective_outside_k_raises(square, disc):
    with pytest.raises(PointNotInterior):
        HTObjective(square, disc)(np.array([1.5, 0.0]))


def test_centroid_gradient_matches_finite_differences(shifted_square, ellipse12):
    f = HTObjective(shifted_square, ellipse12)
    assert f.has_centroid_gradient
    x = np.array([0.1, 0.2])
    fd = central_difference(f, x, 1e-4)
    assert np.linalg.norm(gradient(x, shifted_square, ellipse12) - fd) <= 1e-2 * np.linalg.norm(fd)


def test_classical_gradient_matches_finite_differences(triangle):
    x = np.array([0.2, 0.3])
    fd = central_difference(lambda y: classical_objective(y, triangle), x, 1e-5)
    assert np.allclose(classical_gradient(x, triangle), fd, rtol=1e-6, atol=1e-8)


@pytest.mark.parametrize("norm", ["disc", "ellipse12", "square"])
def test_symmetric_body_is_its_own_center(square, norm, request):
    result = santalo_point(square, request.getfixturevalue(norm))
    assert result.status == SolveStatus.converged
    assert np.linalg.norm(result.point) <= 1e-5


def test_point_moves_with_translations(shifted_square, disc):
    result = santalo_point(shifted_square, disc)
    assert np.allclose(result.point, [-0.3, -0.1], atol=1e-5)
    assert result.method == "gradient"


def test_classical_point_of_triangle(triangle):
    result = classical_santalo_point(triangle)
    assert result.status == SolveStatus.converged
    assert np.allclose(result.point, [1.0 / 3.0, 1.0 / 3.0], atol=1e-4)


def test_solver_rejects_bad_input(square):
    with pytest.raises(GeometryError):
        santalo_point(square, square, tol=0.0)
    with pytest.raises(GeometryError):
        santalo_point(square)


def test_iteration_cap_is_reported():
    K = Polytope.from_vertices([[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [0.0, 3.0]])
    result = santalo_point(K, classical=True, max_iter=1, tol=1e-14)
    assert result.status == SolveStatus.max_iter
    assert result.iterations == 1


def test_strict_convexity_defect(disc, square):
    H = LinearHyperplane(np.array([1.0, 0.0]))
    assert strcvx_defect(H, [-0.2, 0.0], [0.2, 0.0], disc) > 1e-3
    # vertical chords of the square stay centered on x as x slides across
    assert abs(strcvx_defect(H, [-0.2, 0.0], [0.2, 0.0], square)) <= 1e-12


def test_nonunique_example():
    ex = nonunique_example(2, 0.2)
    assert np.allclose(ex.facet_defects, 0.0, atol=1e-10)
    f = HTObjective(ex.K, ex.B)
    values = [f(np.array([0.0, y])) for y in np.linspace(-0.2, 0.2, 5)]
    assert max(values) - min(values) <= 1e-10

    result = santalo_point(ex.K, ex.B)
    assert result.status == SolveStatus.flat_region
    a, b = result.segment
    assert np.linalg.norm(b - a) > 0.4
    assert abs(a[0] - b[0]) <= 1e-3


def test_nonunique_example_arguments():
    with pytest.raises(WrongDimension):
        nonunique_example(3)
    with pytest.raises(GeometryError):
        nonunique_example(2, 0.7)


def test_properness(square, disc):
    probe = properness_probe(square, None, [1.0, 0.0], origin=np.zeros(2), classical=True)
    assert probe.increasing
    assert probe.growth >= 10.0

    probe = properness_probe(square, disc, [1.0, 1.0], origin=np.zeros(2))
    assert probe.increasing
    assert probe.growth >= 10.0


def test_properness_probe_needs_room(square, disc):
    with pytest.raises(PointNotInterior):
        properness_probe(square, disc, [1.0, 0.0], origin=np.zeros(2), distances=(2.0,))


def test_polar_volume_blows_up(square):
    values = [v for _, v in polar_volume_blowup(square, [1.0, 0.0])]
    assert values[0] < values[1] < values[2]


def test_descent_off_the_optimum_meets_its_stopping_rule(triangle, ellipse12):
    result = santalo_point(triangle, ellipse12, resolution=2048)
    assert result.status == SolveStatus.converged
    assert result.iterations >= 1
    assert result.gradient_norm <= 1e-9

    f = HTObjective(triangle, ellipse12, 2048)
    reference = minimize(
        lambda y: f(y) if interior_margin(triangle, y) > 0 else np.inf,
        triangle.vertex_barycenter(),
        method="Nelder-Mead",
        options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000},
    )
    assert f(result.point) <= reference.fun + 1e-6 * abs(reference.fun)
    assert np.linalg.norm(result.point - reference.x) <= 2e-3


@pytest.mark.parametrize(
    "vertices, B",
    [
        ([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]], SmoothBody.ball(3)),
        ([[np.cos(a), np.sin(a)] for a in 2.0 * np.pi * np.arange(5) / 5 + 0.3], SmoothBody.perturbed_ball(2, 0.05)),
    ],
)
def test_converged_means_small_gradient(vertices, B):
    K = Polytope.from_vertices(vertices).translate(0.1 * np.ones(len(vertices[0])))
    result = santalo_point(K, B)
    assert result.status == SolveStatus.converged
    assert result.iterations >= 1
    assert result.gradient_norm <= S.tol
    assert np.linalg.norm(gradient(result.point, K, B)) == pytest.approx(result.gradient_norm, rel=1e-9, abs=1e-15)


@pytest.mark.parametrize("gap", [1e-5, 1e-6, 1e-7])
def test_objectives_near_a_facet_of_the_cube(cube, ball3, gap):
    x = np.array([0.0, 0.0, 1.0 - gap])
    value = classical_objective(x, cube)
    assert value == pytest.approx(2.0 / 3.0 * (1.0 / gap + 1.0 / (2.0 - gap)), rel=1e-9)
    assert np.isfinite(objective(x, cube, ball3))
