"""Acceptance criteria: one test per criterion, each with its tolerance and runtime budget."""
import math
import time

import numpy as np

from bergman_lab.analysis import RadialDensity, distribution_many, layer_cake_pair, monotonicity_check, \
    v_star_ode_residual
from bergman_lab.config import DEFAULT_CAPS
from bergman_lab.functionals import (Cap, ConvexSpec, convex_stability_gap, deficit_distance_family,
                                     extremizer_distance_sq, faber_krahn_deficit, norm_monotonicity_gap,
                                     phi_fit, point_eval_gap, stability_report, standard_convex_set,
                                     standard_piecewise, translate_identity, translated_integral,
                                     wehrl_extremal, wehrl_value)
from bergman_lab.geometry import (ExtendedPoint, SpherePoint, jacobian_residual, sphere_distance,
                                  sphere_isometry, sphere_volume)
from bergman_lab.testfam import TestFunction, default_family
from bergman_lab.weight import (GRID, k_profile, normalization_c, ode_residual, radial_profile,
                                sandwich_bounds, weight_many)

DIMS = (3, 4)
LEVELS = 20


def _levels(T, count=LEVELS):
    # interior levels, log-spaced towards zero
    return np.geomspace(1e-3 * T, 0.99 * T, count)


def _unit(v):
    return v / np.linalg.norm(v)


def test_criterion_01_weight_ode_residual(criterion):
    start = time.perf_counter()
    radii = np.geomspace(1e-3, 1e2, 40)
    worst = max(abs(ode_residual(n, -1.0, r)) for n in (2, 3, 4, 5) for r in radii)
    criterion(1, "weight ODE residual", worst <= 1e-8, time.perf_counter() - start, 5,
              f"max|residual|={worst:.2e}")


def test_criterion_02_n2_closed_forms(criterion):
    start = time.perf_counter()
    r = np.geomspace(1e-3, 1e2, 40)
    prof = radial_profile(2, -1.0)
    errs = [np.max(np.abs(k_profile(2, -1.0, r) / (-2 * r / (1 + r * r)) - 1)),
            np.max(np.abs(prof.value(r) / (-np.log1p(r * r)) - 1))]
    for alpha in (0.5, 1.0, 2.0):
        errs.append(abs(normalization_c(2, alpha) / (4 * math.pi / (alpha + 1)) - 1))
        t = np.geomspace(1e-6, 0.999, 30)
        rho = distribution_many(RadialDensity.weight(2, alpha), t)
        errs.append(np.max(np.abs(rho / (4 * math.pi * (1 - t ** (1 / alpha))) - 1)))
    worst = float(max(errs))
    criterion(2, "n = 2 closed forms", worst <= 1e-10, time.perf_counter() - start, 1,
              f"max relative error={worst:.2e}")


def test_criterion_03_sandwich_bounds(criterion):
    start = time.perf_counter()
    ok = True
    for n in (3, 4, 5):
        lower, upper = sandwich_bounds(n, -1.0, GRID)
        u = radial_profile(n, -1.0).u(GRID)
        ok &= bool(np.all(lower <= u * (1 + 1e-12)) and np.all(u <= upper * (1 + 1e-12)))
    criterion(3, "sandwich bounds on the grid", ok, time.perf_counter() - start, 2, f"{3 * GRID.size} radii")


def test_criterion_04_monotonicity(criterion):
    start = time.perf_counter()
    worst = math.inf
    for n in DIMS:
        for f in default_family(n):
            dens = RadialDensity.of(f)
            resid, tol = monotonicity_check(dens, _levels(dens.max_value))
            worst = min(worst, float(np.min(tol - resid)))
    resid, _ = monotonicity_check(TestFunction(3), _levels(1.0))
    eq = float(np.max(np.abs(resid)))
    criterion(4, "monotonicity residual", worst >= 0 and eq <= 1e-6, time.perf_counter() - start, 30,
              f"worst margin={worst:.2e}, equality |residual|={eq:.2e}")


def test_criterion_05_faber_krahn(criterion):
    start = time.perf_counter()
    worst = math.inf
    for n in DIMS:
        caps = [Cap.at(n, a, frac) for a, frac in DEFAULT_CAPS]
        for f in default_family(n):
            for cap in caps:
                worst = min(worst, faber_krahn_deficit(f, cap))
    sigmas = 0.0
    for a, frac in DEFAULT_CAPS:
        x0 = ExtendedPoint.finite([a, 0.0, 0.0])
        exact, est = translate_identity(3, 1.0, x0, frac * sphere_volume(3), samples=100_000, seed=17)
        sigmas = max(sigmas, abs(est.value - exact) / est.stderr)
    criterion(5, "Faber-Krahn deficit and translated extremizer", worst >= -1e-8 and sigmas <= 3,
              time.perf_counter() - start, 60, f"min deficit={worst:.2e}, worst MC deviation={sigmas:.2f} se")


def test_criterion_06_wehrl_and_norms(criterion):
    start = time.perf_counter()
    worst = math.inf
    for n in DIMS:
        for G in standard_convex_set():
            top = wehrl_extremal(n, 1.0, G)
            for f in default_family(n):
                worst = min(worst, top + 1e-8 - wehrl_value(f, G))
    gap = math.inf
    for p, alpha, q, beta in ((2, 1, 4, 2), (1, 1, 3, 3)):
        for n in DIMS:
            for f in default_family(n, p, alpha):
                gap = min(gap, norm_monotonicity_gap(f, beta, q))
    criterion(6, "Wehrl maximum and norm monotonicity", worst >= 0 and gap >= -1e-8,
              time.perf_counter() - start, 30, f"Wehrl margin={worst:.2e}, min norm gap={gap:.2e}")


def test_criterion_07_point_evaluation(criterion):
    start = time.perf_counter()
    worst = math.inf
    for n in DIMS:
        for f in default_family(n):
            for a in np.linspace(0.0, 3.0, 8):
                worst = min(worst, point_eval_gap(f, ExtendedPoint.finite([a] + [0.0] * (n - 1))))
    criterion(7, "point evaluation", worst >= -1e-8, time.perf_counter() - start, 10, f"min gap={worst:.2e}")


def test_criterion_08_stability_exponent(criterion):
    start = time.perf_counter()
    devs = {}
    for n in (2, 3, 4, 5):
        for alpha in (0.5, 1.0, 2.0):
            devs[(n, alpha)] = phi_fit(n, alpha).slope - (n / 2 + 1)
    key = max(devs, key=lambda k: abs(devs[k]))
    worst = abs(devs[key])
    criterion(8, "stability exponent n/2 + 1", worst <= 0.05, time.perf_counter() - start, 20,
              f"worst |slope - target|={worst:.4f} at (n, alpha)={key}")


def test_criterion_09_stability_chain(criterion):
    start = time.perf_counter()
    gap_margin = dist_margin = math.inf
    for n in DIMS:
        for f in default_family(n):
            for frac in (0.1, 0.5):
                rep = stability_report(f, frac * sphere_volume(n))
                gap_margin = min(gap_margin, rep.deficit_bound + 1e-6 - rep.gap)
            dist = math.sqrt(max(extremizer_distance_sq(f), 0.0))
            dist_margin = min(dist_margin, 2 * (1 - math.sqrt(f.max_normalized)) + 1e-6 - dist)
    fam = deficit_distance_family(3, [0.1, 0.05, 0.02, 0.01, 0.005])
    ratios = [p.ratio for p in fam]
    bounded = all(math.isfinite(r) for r in ratios) and all(b <= a for a, b in zip(ratios, ratios[1:]))
    criterion(9, "stability chain", gap_margin >= 0 and dist_margin >= 0 and bounded,
              time.perf_counter() - start, 60,
              f"gap margin={gap_margin:.2e}, distance margin={dist_margin:.2e}, "
              f"ratios={[round(float(r), 4) for r in ratios]}")


def test_criterion_10_convex_stability(criterion):
    start = time.perf_counter()
    worst = math.inf
    for n in DIMS:
        for f in default_family(n):
            for G in (ConvexSpec.power(2.0), standard_piecewise()):
                lhs, rhs = convex_stability_gap(f, G)
                worst = min(worst, rhs + 1e-6 - lhs)
    criterion(10, "convex stability gap", worst >= 0, time.perf_counter() - start, 20, f"worst margin={worst:.2e}")


def test_criterion_11_geometry(criterion):
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    jac = max(abs(jacobian_residual(ExtendedPoint.finite(rng.standard_normal(3)),
                                    ExtendedPoint.finite(rng.standard_normal(3)))) for _ in range(50))
    iso = 0.0
    e = np.array([0.0, 0.0, 0.0, 1.0])
    for _ in range(50):
        xi = _unit(rng.standard_normal(4))
        A = sphere_isometry(SpherePoint(xi)).entries
        p, q = _unit(rng.standard_normal(4)), _unit(rng.standard_normal(4))
        iso = max(iso, np.max(np.abs(A @ A.T - np.eye(4))), np.max(np.abs(A - A.T)),
                  np.max(np.abs(A @ A - np.eye(4))), np.max(np.abs(A @ e - xi)),
                  abs(float((sphere_distance(A @ p, A @ q) - sphere_distance(p, q))[0])))
    c = normalization_c(3, 1.0)
    inv = max(abs(translated_integral(3, lambda r: weight_many(3, r), a) / c - 1) for a in (0.25, 1.0, 3.0))
    criterion(11, "geometry", jac <= 1e-5 and iso <= 1e-12 and inv <= 1e-8, time.perf_counter() - start, 10,
              f"Jacobian={jac:.2e}, isometry={iso:.2e}, invariance={inv:.2e}")


def test_criterion_12_rearrangement(criterion):
    start = time.perf_counter()
    worst = 0.0
    for f in default_family(3):
        for G in (lambda t: t, lambda t: t * t):
            a, b = layer_cake_pair(f, G)
            worst = max(worst, abs(a - b) / max(1.0, abs(a)))
    ode = 0.0
    for n in DIMS:
        s = np.linspace(0.05, 0.95, 10) * sphere_volume(n)
        ode = max(ode, float(np.max(np.abs(v_star_ode_residual(n, 1.0, s)))))
    criterion(12, "rearrangement consistency", worst <= 1e-6 and ode <= 1e-6, time.perf_counter() - start, 10,
              f"equimeasurability={worst:.2e}, v* ODE={ode:.2e}")
