import numpy as np
import pytest

from app.common.errors import GeometryError, UnsupportedBody
from app.common.linalg import det_with_frame
from app.convex.bodies import SmoothBody
from app.equiaffine.models import TangentFrame
from app.equiaffine.queries import (
    L_matrix,
    L_value,
    blaschke_normal,
    dual_centroid,
    equiaffine_residuals,
    euclidean_dual_centroid,
    tangent_frame,
)

DIRECTIONS_2D = [[1.0, 0.0], [0.6, 0.8], [-0.3, 0.7]]
DIRECTIONS_3D = [[0.0, 0.0, 1.0], [1.0, 2.0, -0.5], [-0.4, 0.1, 0.9]]


@pytest.mark.parametrize("u", DIRECTIONS_3D)
def test_blaschke_normal_on_unit_sphere(ball3, u):
    data = blaschke_normal(ball3, u)
    assert np.allclose(data.Xi, -data.frame.x, atol=1e-6)
    assert data.curvature_power == pytest.approx(1.0)


@pytest.mark.parametrize("u", DIRECTIONS_2D)
def test_blaschke_normal_on_circle_of_radius_two(u):
    B = SmoothBody.ball(2, 2.0)
    data = blaschke_normal(B, u)
    assert np.allclose(data.Xi, -(2.0 ** (-4.0 / 3.0)) * data.frame.x, atol=1e-6)


@pytest.mark.parametrize(
    "body, u",
    [
        (SmoothBody.ellipsoid(np.diag([1.0, 2.0])), [0.6, 0.8]),
        (SmoothBody.perturbed_ball(2, 0.05), [-0.3, 0.7]),
        (SmoothBody.ellipsoid(np.diag([1.0, 2.0, 3.0])), [1.0, 2.0, -0.5]),
        (SmoothBody.perturbed_ball(3, 0.03), [-0.4, 0.1, 0.9]),
    ],
)
def test_defining_conditions(body, u):
    res = equiaffine_residuals(body, u)
    assert res.tangency <= 1e-6
    assert res.volume_condition <= 1e-6
    assert res.metric_min_eigenvalue > 0
    assert res.transversality > 0


def test_ellipsoid_normals_point_at_the_center():
    B = SmoothBody.ellipsoid(np.diag([1.0, 2.0, 3.0]))
    for u in DIRECTIONS_3D:
        assert equiaffine_residuals(B, u).collinearity <= 1e-6


def _skewed_frame(B, u, rng):
    frame = tangent_frame(B, u)
    m = frame.basis.shape[1]
    while True:
        A = rng.normal(size=(m, m))
        if np.linalg.det(A) > 0.2:
            return tangent_frame(B, u, frame.basis @ A)


@pytest.mark.parametrize("body", [SmoothBody.perturbed_ball(2, 0.05), SmoothBody.ellipsoid(np.diag([1.0, 2.0, 3.0]))])
def test_L_identity_and_symmetry(body, rng):
    n = body.dim
    for u in rng.normal(size=(4, n)):
        frame = _skewed_frame(body, u, rng)
        L = L_matrix(frame, body)
        Xi = blaschke_normal(body, u, frame).Xi
        target = det_with_frame(Xi, frame.basis) ** (n + 1)
        assert abs(np.linalg.det(L) - target) <= 1e-6 * abs(target)
        assert np.abs(L - L.T).max() <= 1e-10 * np.abs(L).max()


def test_L_scaling_law(rng):
    B = SmoothBody.perturbed_ball(3, 0.03)
    frame = _skewed_frame(B, [0.2, -0.5, 0.8], rng)
    factors = np.array([0.5, 1.7])
    scaled = L_value(frame.scaled(factors), B)
    assert scaled == pytest.approx(np.prod(factors ** 4) * L_value(frame, B), rel=1e-10)


def test_frame_must_be_tangent(ball3):
    with pytest.raises(GeometryError):
        TangentFrame(x=np.array([0.0, 0.0, 1.0]), u=np.array([0.0, 0.0, 1.0]), basis=np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]]))


def test_polytopes_have_no_blaschke_normal(square):
    with pytest.raises(UnsupportedBody):
        blaschke_normal(square, [1.0, 0.0])


def test_dual_centroid_of_symmetric_body_vanishes(square, cube, disc, ellipse12, ball3):
    assert np.allclose(dual_centroid(square, disc), 0.0, atol=1e-12)
    assert np.allclose(dual_centroid(square, ellipse12), 0.0, atol=1e-10)
    assert np.allclose(dual_centroid(cube, ball3, 3), 0.0, atol=1e-10)


def test_dual_centroid_on_the_ball_is_euclidean(shifted_square, disc):
    assert np.allclose(dual_centroid(shifted_square, disc), euclidean_dual_centroid(shifted_square), atol=1e-12)


def test_dual_centroid_ignores_measure_density(shifted_square, ellipse12):
    plain = dual_centroid(shifted_square, ellipse12)
    weighted = dual_centroid(shifted_square, ellipse12, mu_density=lambda u: 1.0 + 0.5 * u[:, 0] ** 2)
    assert np.linalg.norm(weighted - plain) <= 1e-6 * np.linalg.norm(plain)
    with pytest.raises(GeometryError):
        dual_centroid(shifted_square, ellipse12, mu_density=lambda u: u[:, 0])


def test_dual_centroid_needs_polytope_k(disc, ellipse12):
    with pytest.raises(UnsupportedBody):
        dual_centroid(disc, ellipse12)
