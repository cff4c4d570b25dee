"""Distribution functions, decreasing rearrangements and sphere averages of radial densities.

Radial densities are handled in the angle variable theta = arctan r, where the
centred cap of radius r has measure cap_volume_angle(n, theta) and
dm_S = 2^n sigma_{n-1} (sin theta cos theta)^(n-1) dtheta.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import optimize, special

from .errors import DegenerateLevel, DomainError, LevelAboveMax
from .geometry import ExtendedPoint, phi_points, sphere_volume, surface_area
from .isoperimetry import angle_of_volume, cap_perimeter_angle, cap_volume_angle, theta, theta_many
from .specfun import adaptive_quad
from .testfam import TestFunction
from .weight import radial_measure_angle, radial_profile

_EPS = np.finfo(float).eps
HALF_PI = 0.5 * math.pi


@dataclass(frozen=True)
class RadialDensity:
    """A radial density u(r) = exp(log_u(r)) with its maximum and monotonicity flag.

    ``alpha`` is the weight exponent entering the monotonicity inequality.
    """

    n: int
    log_u: Callable = field(repr=False)
    dlog_u: Callable | None = field(default=None, repr=False)
    alpha: float = 1.0
    peak_radius: float = 0.0
    max_value: float = 1.0
    monotone: bool = True
    label: str = "u"

    def __call__(self, r):
        with np.errstate(under="ignore", invalid="ignore"):
            out = np.exp(self.log_u(np.asarray(r, dtype=float)))
        return np.where(np.isinf(np.asarray(r, dtype=float)), 0.0, out)

    def at_angle(self, th):
        return self(np.tan(np.asarray(th, dtype=float)))

    def log_at_angle(self, th):
        th = np.asarray(th, dtype=float)
        with np.errstate(invalid="ignore"):
            out = self.log_u(np.tan(th))
        return np.where(th >= HALF_PI, -np.inf, out)

    @classmethod
    def weight(cls, n: int, alpha: float) -> "RadialDensity":
        prof = radial_profile(n, -1.0)
        return cls(n, lambda r: alpha * prof.value(r), lambda r: alpha * prof.derivative(r),
                   alpha, 0.0, 1.0, True, f"W^{alpha}")

    @classmethod
    def of(cls, f: TestFunction, normalized: bool = True) -> "RadialDensity":
        """|f|^p W^alpha, divided by ||f||^p when ``normalized``."""
        shift = math.log(f.norm_p) if normalized else 0.0
        r_pk, u_pk = f.peak

        def log_u(r):
            return f.log_density(r) - shift

        def dlog_u(r):
            return f.p * f.log_f_derivative(r) + f.alpha * radial_profile(f.n, -1.0).derivative(r)

        return cls(f.n, log_u, dlog_u, f.alpha, r_pk, u_pk * math.exp(-shift), r_pk == 0.0, str(f.terms))

    @classmethod
    def from_callable(cls, n: int, u: Callable, alpha: float = 1.0, r_max: float = 1e3) -> "RadialDensity":
        """Wrap an arbitrary positive radial function; the maximum is located by scan + refinement."""
        grid = np.concatenate([[0.0], np.geomspace(1e-4, r_max, 2000)])
        vals = np.asarray(u(grid), dtype=float)
        i = int(np.argmax(vals))
        r_pk, u_pk = float(grid[i]), float(vals[i])
        if 0 < i < grid.size - 1:
            res = optimize.minimize_scalar(lambda r: -float(u(np.array([r]))[0]),
                                           bounds=(grid[i - 1], grid[i + 1]), method="bounded",
                                           options={"xatol": 1e-13})
            if -res.fun > u_pk:
                r_pk, u_pk = float(res.x), float(-res.fun)
        monotone = bool(np.all(np.diff(vals) <= 0.0))

        def log_u(r):
            with np.errstate(divide="ignore"):
                return np.log(np.asarray(u(np.asarray(r, dtype=float)), dtype=float))

        return cls(n, log_u, None, alpha, r_pk, u_pk, monotone, "callable")


def _as_density(u, n: int | None = None) -> RadialDensity:
    if isinstance(u, RadialDensity):
        return u
    if isinstance(u, TestFunction):
        return RadialDensity.of(u)
    if n is None:
        raise DomainError("dimension required for a bare callable")
    return RadialDensity.from_callable(n, u)


def level_angles(dens: RadialDensity, t):
    """Angles theta_t with u(tan theta_t) = t for a radially non-increasing density (vectorised).

    Safeguarded Newton iteration on log u in theta inside a shrinking bracket.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    target = np.log(t)
    # bracket every level on a coarse angle table, then polish
    grid = np.linspace(0.0, HALF_PI, 257)
    table = dens.log_at_angle(grid)
    j = np.clip(np.searchsorted(-table, -target, side="left"), 1, grid.size - 1)
    lo = grid[j - 1]
    hi = grid[j]
    g_lo, g_hi = table[j - 1], table[j]
    with np.errstate(invalid="ignore", divide="ignore"):
        frac = np.where(np.isfinite(g_hi), (g_lo - target) / (g_lo - g_hi), 0.5)
    th = lo + np.clip(np.nan_to_num(frac, nan=0.5), 0.0, 1.0) * (hi - lo)
    for _ in range(200):
        g = dens.log_at_angle(th) - target
        lo = np.where(g > 0, th, lo)
        hi = np.where(g <= 0, th, hi)
        if dens.dlog_u is not None:
            r = np.tan(th)
            slope = dens.dlog_u(r) * (1.0 + r * r)
            with np.errstate(divide="ignore", invalid="ignore"):
                cand = th - g / slope
            tiny = np.abs(cand - th) <= 4 * _EPS * np.maximum(th, 1e-300)
            ok = np.isfinite(cand) & (((cand > lo) & (cand < hi)) | tiny | (g == 0))
        else:
            cand = th
            ok = np.zeros_like(th, dtype=bool)
        new = np.where(ok, cand, 0.5 * (lo + hi))
        done = np.abs(new - th) <= 4 * _EPS * np.maximum(new, 1e-300)
        th = new
        if np.all(done | (hi - lo <= 4 * _EPS * hi)):
            break
    return th


def superlevel_intervals(dens: RadialDensity, t: float, points: int = 2048) -> list[tuple[float, float]]:
    """Angle intervals on which u > t, by scanning theta and refining crossings with brentq."""
    grid = np.linspace(0.0, HALF_PI, points)
    g = dens.log_at_angle(grid) - math.log(t)
    pos = g > 0
    out = []
    start = 0.0 if pos[0] else None

    def gap(x):
        # log u = -inf at a zero of u; a finite stand-in keeps brentq bisecting
        return max(float(dens.log_at_angle(x)) - math.log(t), -1e300)

    def root(a, b):
        return optimize.brentq(gap, a, b, xtol=1e-300, rtol=4 * _EPS, maxiter=2000)

    for i in range(1, points):
        if pos[i] and not pos[i - 1]:
            start = root(grid[i - 1], grid[i])
        elif not pos[i] and pos[i - 1]:
            out.append((start, root(grid[i - 1], grid[i])))
            start = None
    if start is not None:
        out.append((start, HALF_PI))
    return out


def distribution(u, n: int | None = None, t: float = 0.5) -> float:
    """rho(t) = m_S{u > t}; zero at or above the maximum of u."""
    dens = _as_density(u, n)
    if not t > 0:
        raise DomainError("levels must be positive")
    if t >= dens.max_value:
        return 0.0
    if dens.monotone:
        return float(cap_volume_angle(dens.n, level_angles(dens, t)[0]))
    return float(sum(cap_volume_angle(dens.n, b) - cap_volume_angle(dens.n, a)
                     for a, b in superlevel_intervals(dens, t)))


def distribution_many(dens: RadialDensity, t) -> np.ndarray:
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.zeros_like(t)
    inside = t < dens.max_value
    if dens.monotone:
        out[inside] = cap_volume_angle(dens.n, level_angles(dens, t[inside]))
    else:
        out[inside] = [distribution(dens, t=v) for v in t[inside]]
    return out


def rho_prime(dens: RadialDensity, t) -> tuple[np.ndarray, np.ndarray]:
    """Richardson-extrapolated centred difference of rho and an error bound.

    Step h = 1e-3 min(t, T - t). The bound combines |D(h/2) - D(h)| with the
    propagated rounding error of rho.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    T = dens.max_value
    if np.any(t >= T):
        raise LevelAboveMax("derivative requested at or above the maximum level")
    gap = np.minimum(t, T - t)
    if np.any(gap <= 1e-9 * T):
        raise DegenerateLevel("level too close to 0 or to the maximum for differencing")
    h = 1e-3 * gap
    pts = np.concatenate([t + h, t - h, t + 0.5 * h, t - 0.5 * h])
    vals = distribution_many(dens, pts).reshape(4, -1)
    d1 = (vals[0] - vals[1]) / (2.0 * h)
    d2 = (vals[2] - vals[3]) / h
    rich = (4.0 * d2 - d1) / 3.0
    err = np.abs(d2 - d1) / 3.0 + 8.0 * _EPS * np.max(np.abs(vals), axis=0) / h
    return rich, err


def coarea_rho_prime(n: int, alpha: float, t: float) -> float:
    """-rho_0'(t) for u = W^alpha from the level-surface integral 2P/((1+r^2)|u'|)."""
    dens = RadialDensity.weight(n, alpha)
    th = float(level_angles(dens, t)[0])
    r = math.tan(th)
    du = abs(float(dens.dlog_u(r))) * t
    return 2.0 * cap_perimeter_angle(n, th) / ((1.0 + r * r) * du)


@dataclass(frozen=True)
class DistributionTable:
    """rho sampled on a decreasing level grid in (T 1e-6, T) with derivative estimates."""

    n: int
    levels: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    derivatives: np.ndarray = field(repr=False)
    derivative_errors: np.ndarray = field(repr=False)
    max_level: float = 1.0
    total: float = 0.0
    density: RadialDensity | None = field(default=None, repr=False, compare=False)

    @classmethod
    def build(cls, u, n: int | None = None, count: int = 400, span: float = 1e-6) -> "DistributionTable":
        dens = _as_density(u, n)
        T = dens.max_value
        levels = np.geomspace(T * span, T, count + 1)[:-1][::-1]
        values = distribution_many(dens, levels)
        deriv, err = rho_prime(dens, levels)
        return cls(dens.n, levels, values, deriv, err, T, sphere_volume(dens.n), dens)

    def rows(self):
        return zip(self.levels, self.values, self.derivatives)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "rho", "rho_prime"])
            for t, r, d in self.rows():
                w.writerow([repr(float(t)), repr(float(r)), repr(float(d))])


@dataclass(frozen=True)
class Rearrangement:
    """s -> u*(s) = sup{t >= 0 : rho(t) > s}."""

    table: DistributionTable

    def __call__(self, s):
        return rearrangement(self.table, s)


def rearrangement(tbl: DistributionTable, s):
    """Decreasing rearrangement of the table's density at measure s in [0, total]."""
    dens = tbl.density
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any(s_arr < 0) or np.any(s_arr > tbl.total * (1 + 1e-14)):
        raise DomainError("s must lie in [0, vol(S^n)]")
    out = np.empty_like(s_arr)
    if dens.monotone:
        # u* = u o R for radially non-increasing u
        out = dens.at_angle(angle_of_volume(tbl.n, np.minimum(s_arr, tbl.total)))
        out = np.where(s_arr == 0.0, tbl.max_level, out)
    else:
        for i, v in enumerate(s_arr):
            if v == 0.0:
                out[i] = tbl.max_level
                continue
            hi = tbl.max_level
            lo = hi * 1e-3
            # descend until the level set is larger than v
            while distribution(dens, t=lo) <= v:
                lo *= 1e-6
                if lo < hi * 1e-300:
                    break
            if distribution(dens, t=lo) <= v:
                out[i] = 0.0
                continue
            out[i] = math.exp(optimize.brentq(lambda lt: distribution(dens, t=math.exp(lt)) - v,
                                              math.log(lo), math.log(hi) - 1e-15, xtol=1e-14))
    return float(out[0]) if np.ndim(s) == 0 else out


def rearrangement_of(dens: RadialDensity) -> Rearrangement:
    """Rearrangement backed by a table stub (no level sampling) for direct evaluation."""
    empty = np.empty(0)
    tbl = DistributionTable(dens.n, empty, empty, empty, empty, dens.max_value, sphere_volume(dens.n), dens)
    return Rearrangement(tbl)


def monotonicity_check(u, t) -> tuple[np.ndarray, np.ndarray]:
    """(alpha Theta(rho(t)) rho'(t) + 1/t, tolerance) at levels t in (0, T)."""
    dens = _as_density(u)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    rho = distribution_many(dens, t)
    d, err = rho_prime(dens, t)
    th = theta_many(dens.n, rho)
    resid = dens.alpha * th * d + 1.0 / t
    tol = 1e-6 + dens.alpha * th * err
    return resid, tol


def monotonicity_residual(f, t: float) -> float:
    """alpha Theta(rho(t)) rho'(t) + 1/t for u = |f|^p W^alpha (normalised f)."""
    resid, _ = monotonicity_check(f, t)
    return float(resid[0])


def ratio_monotone(f, s_grid, slack: float = 1e-8) -> bool:
    """True iff u*(s)/v*(s) is non-decreasing on the grid."""
    dens = _as_density(f)
    ref = RadialDensity.weight(dens.n, dens.alpha)
    s = np.sort(np.asarray(s_grid, dtype=float))
    ratio = rearrangement_of(dens)(s) / rearrangement_of(ref)(s)
    return bool(np.all(np.diff(ratio) >= -slack))


def v_star_ode_residual(n: int, alpha: float, s) -> np.ndarray:
    """alpha Theta(s) v*(s) + (v*)'(s) for v = W^alpha, with (v*)' by Richardson differencing."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    vstar = rearrangement_of(RadialDensity.weight(n, alpha))
    h = 1e-3 * np.minimum(s, sphere_volume(n) - s)
    d1 = (vstar(s + h) - vstar(s - h)) / (2.0 * h)
    d2 = (vstar(s + 0.5 * h) - vstar(s - 0.5 * h)) / h
    deriv = (4.0 * d2 - d1) / 3.0
    return alpha * theta_many(n, s) * vstar(s) + deriv


def radial_integral(n: int, fn: Callable, theta_lo: float = 0.0, theta_hi: float = HALF_PI,
                    breaks=(), abs_tol: float = 1e-13, rel_tol: float = 1e-12) -> float:
    """int fn(theta) dm_S over the centred annulus theta_lo < arctan|x| < theta_hi."""
    pts = sorted({theta_lo, theta_hi, *[b for b in breaks if theta_lo < b < theta_hi]})

    def integrand(th):
        with np.errstate(under="ignore", over="ignore", invalid="ignore"):
            return np.nan_to_num(fn(th) * radial_measure_angle(n, th), nan=0.0)

    return sum(adaptive_quad(integrand, a, b, abs_tol=abs_tol, rel_tol=rel_tol).value
               for a, b in zip(pts[:-1], pts[1:]))


def layer_cake_pair(u, G: Callable) -> tuple[float, float]:
    """(int G(u) dm_S, int_0^vol G(u*(s)) ds) by two independent quadratures."""
    dens = _as_density(u)
    direct = radial_integral(dens.n, lambda th: G(dens.at_angle(th)))
    ustar = rearrangement_of(dens)
    total = sphere_volume(dens.n)
    # split [0, vol] geometrically towards both ends where u* has steep behaviour
    knots = np.concatenate([[0.0], total * np.array([1e-4, 1e-2, 0.1, 0.5, 0.9, 0.99]), [total]])
    via = sum(adaptive_quad(lambda s: G(ustar(s)), a, b, abs_tol=1e-13, rel_tol=1e-12).value
              for a, b in zip(knots[:-1], knots[1:]))
    return direct, via


def psi_value(u, t: float) -> float:
    """Psi(t) = t rho(t) + int_t^T rho - beta rho_0(beta) - int_beta^1 rho_0, rho_0(beta) = rho(t).

    The tails are evaluated as int (u - t)_+ dm_S and int (W^alpha - beta)_+ dm_S.
    """
    dens = _as_density(u)
    ref = RadialDensity.weight(dens.n, dens.alpha)
    rho = distribution(dens, t=t)
    if rho == 0.0:
        return 0.0
    th_u = [b for iv in superlevel_intervals(dens, t) for b in iv] if not dens.monotone else [float(level_angles(dens, t)[0])]
    tail_u = radial_integral(dens.n, lambda th: np.maximum(dens.at_angle(th) - t, 0.0), breaks=th_u)
    th_b = float(angle_of_volume(dens.n, rho))
    beta = float(ref.at_angle(th_b))
    tail_0 = radial_integral(dens.n, lambda th: np.maximum(ref.at_angle(th) - beta, 0.0), 0.0, th_b)
    return t * rho + tail_u - beta * rho - tail_0


def sign_changes(values, atol: float = 0.0) -> list[int]:
    """Signs of the entries (ignoring |v| <= atol) with consecutive duplicates removed."""
    signs = [int(np.sign(v)) for v in values if abs(v) > atol]
    return [s for i, s in enumerate(signs) if i == 0 or s != signs[i - 1]]


def comparison_pattern(u, levels) -> list[int]:
    """Sign pattern of rho(t) - rho_0(t) over increasing levels."""
    dens = _as_density(u)
    ref = RadialDensity.weight(dens.n, dens.alpha)
    t = np.sort(np.asarray(levels, dtype=float))
    diff = distribution_many(dens, t) - distribution_many(ref, t)
    return sign_changes(diff, atol=1e-12 * sphere_volume(dens.n))


@dataclass(frozen=True)
class MeanEstimate:
    value: float
    stderr: float
    samples: int


def _circle_rule(order: int):
    ang = 2.0 * math.pi * np.arange(2 * order) / (2 * order)
    return np.column_stack([np.cos(ang), np.sin(ang)]), np.full(2 * order, 1.0 / (2 * order))


def axial_rule(dim: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes s and weights for the law of zeta . e on S^(dim-1), density prop. to (1-s^2)^((dim-3)/2)."""
    if dim < 2:
        raise DomainError("axial rule needs dim >= 2")
    a = 0.5 * (dim - 3)
    x, w = special.roots_jacobi(order, a, a)
    return x, w / w.sum()


def sphere_rule(dim: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Product rule on the unit sphere of R^dim with weights summing to 1."""
    if dim == 1:
        return np.array([[1.0], [-1.0]]), np.array([0.5, 0.5])
    if dim == 2:
        return _circle_rule(order)
    s, ws = axial_rule(dim, order)
    sub, wsub = sphere_rule(dim - 1, order)
    rad = np.sqrt(1.0 - s * s)
    pts = np.concatenate([np.column_stack([np.full(sub.shape[0], si), ri * sub]) for si, ri in zip(s, rad)])
    wts = np.concatenate([wi * wsub for wi in ws])
    return pts, wts


def _uniform_sphere(dim: int, samples: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((samples, dim))
    return g / np.linalg.norm(g, axis=1)[:, None]


def sphere_mean(g: Callable, x0: ExtendedPoint, r: float, samples: int = 12, method: str = "quadrature",
                seed: int = 0) -> MeanEstimate:
    """Average of g(phi_x0(r zeta)) over the uniform measure on zeta in S^(n-1).

    ``g`` receives an (N, n) array of finite points. With method="quadrature"
    ``samples`` is the per-axis order of a product rule and the error estimate is
    the change against a rule of roughly half the order; with method="mc" it is the
    number of seeded uniform directions and the estimate is the standard error.
    """
    n = x0.dim
    if method == "mc":
        zeta = _uniform_sphere(n, samples, np.random.default_rng(seed))
        pts, inf = phi_points(x0, r * zeta)
        vals = np.asarray(g(pts[~inf]), dtype=float)
        return MeanEstimate(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(vals.size)), int(vals.size))
    if method != "quadrature":
        raise DomainError(f"unknown method {method!r}")

    def rule_mean(order):
        zeta, w = sphere_rule(n, order)
        pts, inf = phi_points(x0, r * zeta)
        if inf.any():
            raise DomainError("the sphere passes through the pole of phi_x0")
        return float(np.dot(w, np.asarray(g(pts), dtype=float))), w.size

    fine, count = rule_mean(samples)
    coarse, _ = rule_mean(max(2, samples // 2 + 1))
    return MeanEstimate(fine, abs(fine - coarse), count)


def radialize(g: Callable, r: float, samples: int = 12, n: int = 3) -> float:
    """g^#(r): the average of g over the Euclidean sphere |x| = r."""
    return sphere_mean(g, ExtendedPoint.origin(n), r, samples).value


def green_kernel(n: int, rho, r: float):
    """g(|x|, r) = (4/sigma_{n-1}) int_{|x|}^r (1+s^2)^(n-2) / s^(n-1) ds."""
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    c = 4.0 / surface_area(n - 1)
    out = np.array([adaptive_quad(lambda s: (1.0 + s * s) ** (n - 2) / s ** (n - 1), float(a), r,
                                  abs_tol=1e-13, rel_tol=1e-13).value if a > 0 else np.inf for a in rho])
    return c * out


def stereo_laplacian(lap_e: Callable, radial_grad: Callable, n: int):
    """Delta_S f = ((1+|x|^2)^2/4) Delta f + ((2-n)/2)(1+|x|^2) x.grad f, given Delta f and x.grad f."""

    def op(x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        s = 1.0 + np.einsum("ij,ij->i", x, x)
        return 0.25 * s * s * lap_e(x) + 0.5 * (2 - n) * s * radial_grad(x)

    return op
