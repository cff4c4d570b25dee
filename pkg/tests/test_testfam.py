import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bergman_lab.errors import DomainError, ParameterError
from bergman_lab.testfam import (TestFunction, default_family, laplace_log_density, laplace_log_residual,
                                 locate_maximum, logF, logF_derivative, logF_upper_bound,
                                 membership_margin, membership_threshold, u_density)
from bergman_lab.weight import radial_profile, weight_many

# mpmath oracle values
GOLDEN_LOGF_3_1_1_1 = 0.4166666666666666435
GOLDEN_LOGF_4_2_01_07 = 0.01686634549757827211720465
GOLDEN_DLOGF_3_1_1_1 = 0.5593657483653907904234604
GOLDEN_U_3_01_2 = 0.3185448329194341451412389


def rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def test_golden_logF():
    assert rel(logF(3, 1, 1.0, 1.0), GOLDEN_LOGF_3_1_1_1) <= 1e-12
    assert rel(logF(4, 2, 0.1, 0.7), GOLDEN_LOGF_4_2_01_07) <= 1e-12


def test_golden_logF_derivative():
    assert rel(logF_derivative(3, 1, 1.0, 1.0), GOLDEN_DLOGF_3_1_1_1) <= 1e-13
    assert logF_derivative(3, 1, 1.0, 0.0) == 0.0


def test_golden_density():
    f = TestFunction(3, 2.0, 1.0, ((1, 0.1),))
    assert rel(u_density(f, 2.0), GOLDEN_U_3_01_2) <= 1e-12


def test_constant_function_density_is_the_weight():
    f = TestFunction(4, 2.0, 1.5)
    r = np.array([0.0, 0.5, 3.0])
    assert np.allclose(u_density(f, r), weight_many(4, r, 1.5), rtol=1e-15)
    assert f.is_constant
    assert f.norm_p == 1.0


def test_density_at_origin_is_one():
    for f in default_family(3):
        assert u_density(f, 0.0) == 1.0


def test_density_vanishes_at_infinity():
    f = default_family(3)[0]
    assert f.density(np.inf) == 0.0


def test_negative_radius_rejected():
    with pytest.raises(DomainError):
        logF_derivative(3, 1, 0.1, -1.0)
    with pytest.raises(DomainError):
        u_density(default_family(3)[0], -0.5)


@given(st.sampled_from([3, 4, 5]), st.floats(1e-3, 50.0))
def test_logF_below_exponential_bound(n, r):
    assert logF(n, 1, 0.1, r) <= logF_upper_bound(n, 0.1, r) * (1 + 1e-12) + 1e-15


@given(st.sampled_from([3, 4]), st.floats(1e-2, 1e2))
def test_laplace_log_residual_small(n, r):
    for f in default_family(n):
        assert abs(laplace_log_residual(f, r)) <= 1e-8


def test_laplace_log_residual_of_constant():
    assert laplace_log_residual(TestFunction(3), 1.3) == 0.0


def test_laplace_log_density_formula():
    f = TestFunction(3, 2.0, 1.0, ((1, 0.05), (2, 0.05)))
    r = np.array([0.3, 1.0, 5.0])
    w = 1 / (1 + r * r)
    want = 2.0 * (0.05 * w + 0.05 * w ** 2) - 1.0
    assert np.allclose(laplace_log_density(f, r), want, atol=1e-9)


def test_membership():
    n = 3
    k = membership_threshold(n)
    assert rel(k, math.gamma(1.5) * math.gamma(2.5) / math.gamma(3)) <= 1e-15
    assert rel(membership_margin(TestFunction(n, 2.0, 1.5)), 1.5 * k) <= 1e-15
    with pytest.raises(ParameterError):
        TestFunction(n, 2.0, 1.0, ((1, 0.6 * k),))


def test_invalid_parameters():
    with pytest.raises(DomainError):
        TestFunction(2)
    with pytest.raises(ParameterError):
        TestFunction(3, 2.0, 1.0, ((0, 0.1),))
    with pytest.raises(ParameterError):
        TestFunction(3, 2.0, 1.0, ((1, -0.1),))
    with pytest.raises(ParameterError):
        TestFunction(3, 0.0, 1.0)


def test_with_params_keeps_terms():
    f = TestFunction(3, 2.0, 1.0, ((1, 0.05),))
    g = f.with_params(alpha=2.0)
    assert g.terms == f.terms and g.alpha == 2.0 and g.p == 2.0


def test_density_derivative_matches_differences():
    f = default_family(4)[3]
    r, h = 0.8, 1e-6
    fd = (f.density(r + h) - f.density(r - h)) / (2 * h)
    assert rel(float(f.density_derivative(r)), fd) <= 1e-7


@pytest.mark.parametrize("n", [3, 4])
def test_peak_is_the_maximum(n):
    grid = np.geomspace(1e-4, 1e3, 4000)
    for f in default_family(n):
        r_star, peak = locate_maximum(f)
        assert peak >= f.density(grid).max() * (1 - 1e-12)
        assert rel(peak, f.density(r_star)) <= 1e-12


def test_max_normalized_is_at_least_one_for_constant():
    assert TestFunction(3).max_normalized == 1.0


def test_profiles_are_cached():
    assert radial_profile(3, 0.1, 1) is radial_profile(3, 0.1, 1)
