import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bergman_lab.errors import DomainError
from bergman_lab.weight import (GRID, gamma_ratio, h_profile, k_profile, normalization_c, ode_residual,
                                ode_residual_direct, radial_profile, sandwich_bounds, sandwich_check,
                                weight_many, weight_W)

# mpmath oracle: quadrature of the unreduced k = (4c/n) r (1+r^2)^(n-2) 2F1(n/2, n+m; n/2+1; -r^2)
GOLDEN_H3_1 = -0.5
GOLDEN_H4_2 = -1.203145970811366791533586
GOLDEN_K3_2 = -0.8419679486213064896038897


def rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


# ----------------------------------------------------------------
# n = 2 closed forms

radius = st.floats(1e-3, 1e2)


@given(radius)
def test_n2_k_closed_form(r):
    assert rel(k_profile(2, -1.0, r), -2 * r / (1 + r * r)) <= 1e-12


@given(radius)
def test_n2_h_closed_form(r):
    assert rel(radial_profile(2, -1.0).value(r), -math.log1p(r * r)) <= 1e-12


def test_n2_examples():
    assert rel(k_profile(2, -1.0, 1.0), -1.0) <= 1e-14
    assert rel(h_profile(2, -1.0, 1.0), -math.log(2)) <= 1e-10
    assert rel(weight_W(2, 1.0), 0.5) <= 1e-10


@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0, 3.7])
def test_n2_normalization(alpha):
    assert rel(normalization_c(2, alpha), 4 * math.pi / (alpha + 1)) <= 1e-12


# ----------------------------------------------------------------
# golden values


def test_golden_h3():
    assert rel(h_profile(3, -1.0, 1.0), GOLDEN_H3_1) <= 1e-10
    assert rel(weight_W(3, 1.0), math.exp(GOLDEN_H3_1)) <= 1e-10


def test_golden_h4():
    assert rel(radial_profile(4, -1.0).value(2.0), GOLDEN_H4_2) <= 1e-12


def test_golden_k3():
    assert rel(k_profile(3, -1.0, 2.0), GOLDEN_K3_2) <= 1e-13


def test_profile_and_quadrature_agree():
    for n in (3, 4, 5):
        for r in (0.3, 2.0, 15.0):
            assert rel(radial_profile(n, -1.0).value(r), h_profile(n, -1.0, r)) <= 1e-9


def test_profile_is_linear_in_c():
    r = np.geomspace(1e-3, 1e2, 11)
    a = radial_profile(4, -1.0).value(r)
    b = radial_profile(4, 2.5).value(r)
    assert np.allclose(b, -2.5 * a, rtol=1e-14)


# ----------------------------------------------------------------
# elementary properties


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_values_at_origin(n):
    assert k_profile(n, -1.0, 0.0) == 0.0
    assert h_profile(n, -1.0, 0.0) == 0.0
    assert weight_W(n, 0.0) == 1.0


@pytest.mark.parametrize("n", [3, 4, 5])
def test_weight_decreases_strictly(n):
    h = radial_profile(n, -1.0).value(GRID)
    assert np.all(np.diff(h) < 0)


def test_weight_many_scales_with_alpha():
    r = np.array([0.2, 1.0, 4.0])
    assert np.allclose(weight_many(3, r, 2.0), weight_many(3, r) ** 2, rtol=1e-14)


def test_normalization_rejects_nonpositive_alpha():
    with pytest.raises(DomainError):
        normalization_c(3, 0.0)


def test_gamma_ratio_n3():
    assert rel(gamma_ratio(3), math.gamma(2.5) * math.gamma(1.5) / math.gamma(3)) <= 1e-15


# ----------------------------------------------------------------
# ODE residual


@pytest.mark.parametrize("n", [3, 4, 5])
@pytest.mark.parametrize("r", [0.1, 1.0, 10.0])
def test_ode_residual_examples(n, r):
    assert abs(ode_residual(n, -1.0, r)) <= 1e-8


@given(st.sampled_from([2, 3, 4, 5]), st.floats(1e-3, 1e2), st.floats(-5.0, 5.0))
def test_ode_residual_property(n, r, c):
    assert abs(ode_residual(n, c, r)) <= 1e-8 * max(1.0, abs(c))


def test_ode_residual_zero_source():
    assert ode_residual(3, 0.0, 1.0) == 0.0
    assert k_profile(3, 0.0, 1.0) == 0.0


def test_ode_residual_direct_cross_check():
    for n in (3, 4):
        assert abs(ode_residual_direct(n, -1.0, 0.7)) <= 1e-6


def test_ode_residual_rejects_origin():
    with pytest.raises(DomainError):
        ode_residual(3, -1.0, 0.0)


# ----------------------------------------------------------------
# sandwich bounds


def test_sandwich_examples():
    assert sandwich_bounds(3, -1.0, 0.0) == (1.0, 1.0)
    assert sandwich_check(3, -1.0, 1.0)
    assert sandwich_check(5, -1.0, 10.0)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_sandwich_on_grid(n):
    lower, upper = sandwich_bounds(n, -1.0, GRID)
    u = radial_profile(n, -1.0).u(GRID)
    assert np.all(lower <= u * (1 + 1e-12))
    assert np.all(u <= upper * (1 + 1e-12))


def test_k_sandwich_n3():
    r, n, c = 2.0, 3, -1.0
    base = 4 * r * c / n * (1 + r * r) ** ((n - 4) / 2)
    lo, hi = sorted([base, base * gamma_ratio(n)])
    assert lo <= k_profile(n, c, r) <= hi


def test_sandwich_rejects_bad_arguments():
    with pytest.raises(DomainError):
        sandwich_bounds(2, -1.0, 1.0)
    with pytest.raises(DomainError):
        sandwich_check(3, 1.0, 1.0)
