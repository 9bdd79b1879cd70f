from math import pi

import numpy as np
import pytest

from app.common.errors import DimensionMismatch, OriginNotInterior, UnsupportedBody, WrongDimension, ZeroDirection
from app.convex.bodies import SmoothBody
from app.ht.models import HTConstants
from app.ht.queries import (
    continuity_probe,
    ht_area,
    ht_area_routes,
    ht_volume,
    isoperimetric_ratio,
    isoperimetrix_grid,
    isoperimetrix_support,
    symplectic_area_2d,
)
from app.harness.random_bodies import random_polytope


def test_isoperimetric_bounds():
    assert HTConstants.isoperimetric_bound(2) == pytest.approx(32.0 / pi)
    assert HTConstants.isoperimetric_bound(3) == pytest.approx(216.0 / pi)


@pytest.mark.parametrize(
    "name, expected, tol",
    [
        ("disc", 2.0 * pi, 1e-6),
        ("square", 8.0, 1e-9),
    ],
)
def test_area_anchors(name, expected, tol, request):
    body = request.getfixturevalue(name)
    assert abs(ht_area(body, body) - expected) <= tol


def test_area_anchors_3d(ball3, cube):
    assert ht_area(ball3, ball3) == pytest.approx(4.0 * pi, rel=1e-9)
    assert ht_area(cube, cube) == pytest.approx(48.0 / pi, rel=1e-12)


def test_volume_anchors(disc, square):
    assert abs(ht_volume(disc, disc) - pi) <= 1e-12
    assert ht_volume(square, square) == pytest.approx(8.0 / pi, rel=1e-12)


def test_area_needs_origin_inside_norm_body(square, disc):
    with pytest.raises(OriginNotInterior):
        ht_area(disc, square.translate([2.0, 0.0]))


def test_area_dimension_mismatch(square, ball3):
    with pytest.raises(DimensionMismatch):
        ht_area(square, ball3)


@pytest.mark.parametrize("dim", [2, 3])
def test_duality_random_polytopes(rng, dim):
    for _ in range(5):
        K = random_polytope(rng, dim)
        B = random_polytope(rng, dim)
        assert ht_area_routes(K, B).relative_error <= 1e-9


def test_duality_mixed_pairs(square, disc, ellipse12):
    routes = ht_area_routes(square, disc, 2048)
    assert routes.relative_error <= 1e-5
    routes = ht_area_routes(ellipse12, square, 2048)
    assert routes.relative_error <= 1e-5


def test_duality_needs_closed_form_polar(square):
    with pytest.raises(UnsupportedBody):
        ht_area_routes(SmoothBody.perturbed_ball(2, 0.05), square)


def test_symplectic_formula_is_exact_on_polygons(rng, square, triangle):
    for K, B in [(square, square), (triangle.translate([-0.25, -0.25]), square)]:
        assert symplectic_area_2d(K, B) == pytest.approx(ht_area(K, B), rel=1e-9)
    for _ in range(5):
        K = random_polytope(rng, 2)
        B = random_polytope(rng, 2)
        assert symplectic_area_2d(K, B) == pytest.approx(ht_area(K, B), rel=1e-9)


def test_symplectic_formula_with_smooth_members(square, disc):
    assert symplectic_area_2d(disc, disc, 4096) == pytest.approx(2.0 * pi, rel=1e-3)
    assert symplectic_area_2d(square, disc, 4096) == pytest.approx(ht_area(square, disc, 4096), rel=1e-3)


def test_symplectic_formula_is_planar(cube):
    with pytest.raises(WrongDimension):
        symplectic_area_2d(cube, cube)


def test_isoperimetric_ratio(square, disc, cube):
    square_ratio = isoperimetric_ratio(square, square)
    assert square_ratio.ratio == pytest.approx(8.0 * pi, rel=1e-12)
    assert square_ratio.holds

    disc_ratio = isoperimetric_ratio(disc, disc)
    assert disc_ratio.ratio == pytest.approx(4.0 * pi, rel=1e-9)
    assert disc_ratio.ratio >= 32.0 / pi

    cube_ratio = isoperimetric_ratio(cube, cube)
    assert cube_ratio.ratio == pytest.approx(1728.0 / pi, rel=1e-12)
    assert cube_ratio.holds


def test_isoperimetric_ratio_random_pairs(rng):
    for dim in (2, 3):
        bound = HTConstants.isoperimetric_bound(dim)
        for _ in range(5):
            result = isoperimetric_ratio(random_polytope(rng, dim), random_polytope(rng, dim))
            assert result.ratio >= bound - 1e-9


def test_isoperimetrix_of_disc_is_disc(disc):
    assert isoperimetrix_support(disc, [0.0, 3.0]) == pytest.approx(1.0)
    directions, support = isoperimetrix_grid(disc, 16)
    assert directions.shape == (16, 2)
    assert np.allclose(support, 1.0)
    with pytest.raises(ZeroDirection):
        isoperimetrix_support(disc, [0.0, 0.0])


def test_continuity_probe_shrinks(square, disc):
    probe = continuity_probe(square, disc, seed=1)
    gaps = [gap for _, gap in probe]
    assert gaps[0] > gaps[-1]
    assert gaps[-1] < 1e-3
