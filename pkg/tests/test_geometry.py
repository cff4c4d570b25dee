import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bergman_lab.errors import DomainError, SingularityError
from bergman_lab.geometry import (ExtendedPoint, SpherePoint, drop, geodesic_radius, jacobian_residual,
                                  lift, measure_density, phi_norm, phi_points, phi_x0, sphere_distance,
                                  sphere_isometry, sphere_volume, stereo_drop, stereo_lift, surface_area)

coord = st.floats(-20.0, 20.0, allow_nan=False)


def point(n):
    return st.lists(coord, min_size=n, max_size=n).map(ExtendedPoint.finite)


# ----------------------------------------------------------------
# chart


def test_lift_of_origin_and_infinity():
    assert np.array_equal(stereo_lift(ExtendedPoint.origin(3)).xi, [0, 0, 0, 1])
    assert np.array_equal(stereo_lift(ExtendedPoint.infinity(3)).xi, [0, 0, 0, -1])


def test_unit_radius_lifts_to_equator():
    xi = stereo_lift(ExtendedPoint.finite([0.6, 0.8])).xi
    assert abs(xi[-1]) < 1e-15
    assert abs(np.linalg.norm(xi) - 1) < 1e-15


def test_drop_of_poles():
    assert stereo_drop(SpherePoint([0, 0, 1])) == ExtendedPoint.origin(2)
    assert stereo_drop(SpherePoint([0, 0, -1])).at_infinity


def test_sphere_point_requires_unit_norm():
    with pytest.raises(DomainError):
        SpherePoint([1.0, 1.0, 0.0])


@given(point(3))
def test_lift_drop_round_trip(x):
    back = stereo_drop(stereo_lift(x))
    assert np.allclose(back.array, x.array, rtol=1e-12, atol=1e-12)


def test_drop_is_accurate_near_the_south_pole():
    x = np.array([[3e7, -4e7]])
    coords, inf = drop(lift(x))
    assert not inf[0]
    assert np.allclose(coords, x, rtol=1e-12)


# ----------------------------------------------------------------
# isometries


def test_isometry_of_north_pole_is_identity():
    assert np.array_equal(sphere_isometry(SpherePoint([0, 0, 0, 1])).entries, np.eye(4))


@given(point(3))
def test_isometry_is_symmetric_orthogonal_and_hits_xi(x):
    xi = stereo_lift(x)
    a = sphere_isometry(xi).entries
    assert np.max(np.abs(a - a.T)) <= 1e-12
    assert np.max(np.abs(a @ a.T - np.eye(4))) <= 1e-12
    assert np.max(np.abs(a[:, -1] - xi.xi)) <= 1e-12


@given(point(3), point(3))
def test_isometry_preserves_distances(x0, x):
    a = sphere_isometry(stereo_lift(x0))
    xi, eta = lift(x.array), lift(np.zeros(3))
    before = sphere_distance(xi, eta)
    after = sphere_distance(a.apply(xi), a.apply(eta))
    assert abs(after - before)[0] <= 1e-12


@given(point(3))
def test_phi_maps_origin_to_x0_and_x0_to_origin(x0):
    assert np.allclose(phi_x0(x0, ExtendedPoint.origin(3)).array, x0.array, rtol=1e-12, atol=1e-12)
    assert phi_x0(x0, x0).norm <= 1e-12 * (1 + x0.norm)


@given(point(2))
def test_phi_at_origin_is_identity(x):
    assert phi_x0(ExtendedPoint.origin(2), x) == x


@given(point(3), point(3))
def test_phi_is_an_involution(x0, x):
    y = phi_x0(x0, x)
    if y.at_infinity:
        return
    back = phi_x0(x0, y)
    assert np.allclose(back.array, x.array, rtol=1e-9, atol=1e-9)


def test_phi_sends_antipode_of_x0_to_infinity():
    x0 = ExtendedPoint.finite([0.5, 0.0])
    assert phi_x0(x0, ExtendedPoint.finite([-2.0, 0.0])).at_infinity


def test_phi_points_matches_scalar_map(rng):
    x0 = ExtendedPoint.finite([0.3, -1.2, 0.7])
    x = rng.normal(size=(25, 3))
    y, inf = phi_points(x0, x)
    assert not inf.any()
    for row, yy in zip(x, y):
        assert np.allclose(phi_x0(x0, ExtendedPoint.finite(row)).array, yy, rtol=1e-13, atol=1e-13)


def test_phi_norm_matches_the_reflection(rng):
    x0 = ExtendedPoint.finite([0.8, 0.0, 0.0])
    x = rng.normal(size=(100, 3))
    y, _ = phi_points(x0, x)
    rho = np.linalg.norm(x, axis=1)
    s = x[:, 0] / rho
    assert np.allclose(phi_norm(0.8, rho, s), np.linalg.norm(y, axis=1), rtol=1e-11)


def test_phi_norm_pole_is_infinite():
    assert np.isinf(phi_norm(2.0, 0.5, -1.0))


# ----------------------------------------------------------------
# measure and Jacobian


def test_measure_density_examples():
    assert measure_density(3, ExtendedPoint.origin(3)) == 8.0
    assert measure_density(2, ExtendedPoint.finite([1.0, 0.0])) == 1.0
    with pytest.raises(DomainError):
        measure_density(2, ExtendedPoint.infinity(2))


def test_sphere_volumes():
    assert math.isclose(sphere_volume(2), 4 * math.pi, rel_tol=1e-15)
    assert math.isclose(sphere_volume(3), 2 * math.pi ** 2, rel_tol=1e-15)
    assert math.isclose(surface_area(1), 2 * math.pi, rel_tol=1e-15)


def test_geodesic_radius_of_unit_ball_is_quarter_turn():
    assert math.isclose(geodesic_radius(1.0), math.pi / 2, rel_tol=1e-15)


def test_jacobian_at_identity_is_exact():
    assert jacobian_residual(ExtendedPoint.origin(3), ExtendedPoint.finite([0.4, -1.0, 2.0])) == 0.0


@pytest.mark.parametrize("n", [2, 3, 4])
def test_jacobian_endpoints(n, rng):
    x0 = ExtendedPoint.finite(rng.normal(size=n))
    assert abs(jacobian_residual(x0, ExtendedPoint.origin(n))) <= 1e-5
    assert abs(jacobian_residual(x0, x0)) <= 1e-5


def test_jacobian_random_pairs(rng):
    worst = 0.0
    for _ in range(50):
        x0 = ExtendedPoint.finite(rng.normal(size=3))
        x = ExtendedPoint.finite(rng.normal(size=3))
        worst = max(worst, abs(jacobian_residual(x0, x)))
    assert worst <= 1e-5


def test_jacobian_rejects_pole():
    x0 = ExtendedPoint.finite([1.0, 0.0])
    with pytest.raises(SingularityError):
        jacobian_residual(x0, ExtendedPoint.finite([-1.0, 0.0]))
