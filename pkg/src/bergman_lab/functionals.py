"""Norms, concentration and Wehrl-type functionals, and the stability quantities built on them.

Conventions. ``u_n`` denotes the normalised density |f|^p W^alpha / ||f||^p, whose
raw mass against dm_S is c(alpha). Concentration, the deficit and every quantity
in :class:`StabilityReport` except ``phi_T`` divide masses by c(alpha); Wehrl
values, ``phi_T`` and both sides of :func:`convex_stability_gap` use raw dm_S.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np
from scipy import optimize, special

from .analysis import (HALF_PI, MeanEstimate, RadialDensity, _uniform_sphere, axial_rule,
                       distribution_many, level_angles, radial_integral)
from .errors import DomainError, NoCrossing, ParameterError
from .geometry import ExtendedPoint, drop, phi_norm, phi_points, sphere_volume
from .isoperimetry import angle_of_volume, cap_volume_angle
from .specfun import adaptive_quad
from .testfam import TestFunction
from .weight import normalization_c, radial_measure_angle, radial_profile, weight_many

# |x0| grid for the infimum over translates (radial f attains it at the origin)
X0_GRID = (0.0, 0.25, 0.5, 1.0, 2.0)
_AXIAL_ORDER = 64


# ---------------------------------------------------------------------------
# convex integrands


@dataclass(frozen=True)
class ConvexSpec:
    """A convex G on [0, inf): power t^s (s > 1), entropy t log t, or piecewise linear.

    Piecewise-linear specs are G(t) = offset + int_0^t slope(tau) dtau with
    ``slopes[i]`` valid between ``knots[i-1]`` and ``knots[i]``. ``derivative``
    is the right derivative and ``left_derivative`` the left one; they differ
    only at knots.
    """

    kind: str
    exponent: float = 2.0
    knots: tuple = ()
    slopes: tuple = ()
    offset: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "knots", tuple(float(k) for k in self.knots))
        object.__setattr__(self, "slopes", tuple(float(s) for s in self.slopes))
        if self.kind == "power":
            if not self.exponent > 1:
                raise ParameterError("power specs need an exponent > 1")
        elif self.kind == "piecewise":
            k, s = self.knots, self.slopes
            if len(s) != len(k) + 1:
                raise ParameterError("piecewise specs need one more slope than knots")
            if any(v <= 0 for v in k) or any(b <= a for a, b in zip(k, k[1:])):
                raise ParameterError("knots must be positive and strictly increasing")
            if any(b < a for a, b in zip(s, s[1:])):
                raise ParameterError("slopes must be non-decreasing for convexity")
        elif self.kind != "entropy":
            raise ParameterError(f"unknown convex kind {self.kind!r}")

    @classmethod
    def power(cls, s: float) -> "ConvexSpec":
        return cls("power", exponent=float(s))

    @classmethod
    def entropy(cls) -> "ConvexSpec":
        return cls("entropy")

    @classmethod
    def piecewise(cls, knots, slopes, offset: float = 0.0) -> "ConvexSpec":
        return cls("piecewise", knots=tuple(knots), slopes=tuple(slopes), offset=offset)

    @classmethod
    def linear(cls, slope: float, offset: float = 0.0) -> "ConvexSpec":
        return cls("piecewise", slopes=(slope,), offset=offset)

    @property
    def label(self) -> str:
        if self.kind == "power":
            return f"t^{self.exponent:g}"
        if self.kind == "entropy":
            return "t log t"
        return f"pl{list(self.knots)}"

    def _knot_values(self) -> np.ndarray:
        k = np.asarray(self.knots)
        widths = np.diff(np.concatenate([[0.0], k]))
        return self.offset + np.concatenate([[0.0], np.cumsum(widths * np.asarray(self.slopes[:-1]))])

    def value(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "power":
            return t ** self.exponent
        if self.kind == "entropy":
            with np.errstate(divide="ignore", invalid="ignore"):
                return np.where(t > 0, t * np.log(np.where(t > 0, t, 1.0)), 0.0)
        k = np.asarray(self.knots)
        j = np.searchsorted(k, t, side="right")
        start = np.concatenate([[0.0], k])[j]
        return self._knot_values()[j] + np.asarray(self.slopes)[j] * (t - start)

    def derivative(self, t):
        """Right derivative G'(t+)."""
        t = np.asarray(t, dtype=float)
        if self.kind == "power":
            return self.exponent * t ** (self.exponent - 1.0)
        if self.kind == "entropy":
            with np.errstate(divide="ignore"):
                return np.log(t) + 1.0
        return np.asarray(self.slopes)[np.searchsorted(np.asarray(self.knots), t, side="right")]

    def left_derivative(self, t):
        """Left derivative G'_-(t)."""
        if self.kind != "piecewise":
            return self.derivative(t)
        t = np.asarray(t, dtype=float)
        return np.asarray(self.slopes)[np.searchsorted(np.asarray(self.knots), t, side="left")]


def standard_convex_set() -> list[ConvexSpec]:
    """t^1.5, t^2, t^3 and t log t."""
    return [ConvexSpec.power(1.5), ConvexSpec.power(2.0), ConvexSpec.power(3.0), ConvexSpec.entropy()]


def standard_piecewise() -> ConvexSpec:
    return ConvexSpec.piecewise((0.3, 0.7, 0.97), (0.0, 0.5, 1.5, 3.0))


# ---------------------------------------------------------------------------
# regions


@dataclass(frozen=True)
class Cap:
    """Geodesic ball of spherical measure ``measure`` centred at the image of ``center``."""

    center: ExtendedPoint
    measure: float

    def __post_init__(self):
        total = sphere_volume(self.center.dim)
        if not 0.0 < self.measure < total:
            raise DomainError(f"cap measure must lie in (0, {total}), got {self.measure}")

    @classmethod
    def at(cls, n: int, offset: float, fraction: float) -> "Cap":
        """Cap of measure ``fraction * vol(S^n)`` centred at (offset, 0, ..., 0)."""
        if not 0.0 < fraction < 1.0:
            raise DomainError("measure fraction must lie in (0, 1)")
        coords = np.zeros(n)
        coords[0] = offset
        return cls(ExtendedPoint.finite(coords), fraction * sphere_volume(n))

    @property
    def n(self) -> int:
        return self.center.dim

    @property
    def offset(self) -> float:
        return math.inf if self.center.at_infinity else self.center.norm

    @property
    def angle(self) -> float:
        """arctan of the Euclidean radius of the centred cap of the same measure."""
        return float(angle_of_volume(self.n, self.measure))


@dataclass(frozen=True)
class Annuli:
    """Finite union of centred annuli a_i < |x| < b_i (b_i may be inf)."""

    n: int
    bounds: tuple

    def __post_init__(self):
        b = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        object.__setattr__(self, "bounds", b)
        flat = [v for iv in b for v in iv]
        if any(v < 0 for v in flat) or any(hi <= lo for lo, hi in b) or any(
                b[i][1] > b[i + 1][0] for i in range(len(b) - 1)):
            raise DomainError("annuli must be disjoint, ordered and non-degenerate")

    @property
    def measure(self) -> float:
        return float(sum(cap_volume_angle(self.n, math.atan(hi)) - cap_volume_angle(self.n, math.atan(lo))
                         for lo, hi in self.bounds))


# ---------------------------------------------------------------------------
# norms


def _density(f: TestFunction) -> RadialDensity:
    return RadialDensity.of(f, normalized=True)


def bergman_norm(f: TestFunction) -> float:
    """||f||_{alpha,p} = ((1/c(alpha)) int |f|^p W^alpha dm_S)^(1/p)."""
    return f.norm_p ** (1.0 / f.p)


def norm_monotonicity_gap(f: TestFunction, beta: float, q: float) -> float:
    """||f||_{alpha,p} - ||f||_{beta,q} for p/alpha = q/beta and q >= p."""
    if not math.isclose(f.p / f.alpha, q / beta, rel_tol=1e-12):
        raise ParameterError("the exponents must satisfy p/alpha = q/beta")
    if q < f.p:
        raise ParameterError("need q >= p and beta >= alpha")
    if q == f.p and beta == f.alpha:
        return 0.0
    return bergman_norm(f) - bergman_norm(f.with_params(p=q, alpha=beta))


def point_eval_gap(f: TestFunction, x0: ExtendedPoint) -> float:
    """||f||^p - |f(x0)|^p W^alpha(x0); non-negative for p >= 1."""
    if f.p < 1:
        raise ParameterError("the point-evaluation bound is stated for p >= 1")
    if x0.dim != f.n:
        raise DomainError("point dimension does not match the test function")
    if x0.at_infinity:
        return f.norm_p
    return f.norm_p - float(f.density(x0.norm))


# ---------------------------------------------------------------------------
# concentration


def _direction_fraction(n: int, a: float, R: float, rho):
    """Share of the sphere |y| = rho (uniform directions) inside the cap |phi_x0(y)| < R, |x0| = a."""
    rho = np.asarray(rho, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        mu0 = (rho * rho + a * a - R * R * (1.0 + a * a * rho * rho)) / (2.0 * a * rho * (1.0 + R * R))
    mu0 = np.nan_to_num(mu0, nan=1.0, posinf=1.0, neginf=-1.0)
    x = np.clip(0.5 * (1.0 - mu0), 0.0, 1.0)
    if n == 2:
        return np.arccos(np.clip(mu0, -1.0, 1.0)) / math.pi
    half = 0.5 * (n - 1)
    return special.betainc(half, half, x)


def _fraction_breaks(a: float, R: float) -> list[float]:
    """Angles arctan(rho) at which the direction fraction reaches 0 or 1."""
    out = []
    for sign in (1.0, -1.0):
        coeffs = [1.0 - R * R * a * a, -sign * 2.0 * a * (1.0 + R * R), a * a - R * R]
        for root in np.roots(coeffs):
            if abs(root.imag) < 1e-12 and root.real > 0:
                out.append(math.atan(root.real))
    return sorted(out)


def _region_mass(dens: RadialDensity, omega) -> float:
    """Raw int_omega u dm_S for a radial density."""
    n = dens.n
    if isinstance(omega, Annuli):
        return sum(radial_integral(n, dens.at_angle, math.atan(lo), math.atan(hi)) for lo, hi in omega.bounds)
    th_R = omega.angle
    if omega.center.at_infinity:
        lo = float(angle_of_volume(n, sphere_volume(n) - omega.measure))
        return radial_integral(n, dens.at_angle, lo, HALF_PI)
    a = omega.offset
    if a == 0.0:
        return radial_integral(n, dens.at_angle, 0.0, th_R)
    R = math.tan(th_R)
    return radial_integral(n, lambda th: dens.at_angle(th) * _direction_fraction(n, a, R, np.tan(th)),
                           breaks=_fraction_breaks(a, R))


def concentration(f: TestFunction, omega) -> float:
    """C_omega(f) = (1/c(alpha)) int_omega |f|^p W^alpha dm_S / ||f||^p.

    Off-centre caps are reduced to a single radial integral: for |y| = rho the
    directions with |phi_x0(y)| < R form a spherical cap of S^(n-1) whose share is
    an incomplete beta function of a closed-form threshold on cos(angle(x0, y)).
    """
    if omega.n != f.n:
        raise DomainError("region dimension does not match the test function")
    return _region_mass(_density(f), omega) / normalization_c(f.n, f.alpha)


@lru_cache(maxsize=256)
def _extremal_concentration(n: int, alpha: float, measure: float) -> float:
    dens = RadialDensity.weight(n, alpha)
    return radial_integral(n, dens.at_angle, 0.0, float(angle_of_volume(n, measure))) / normalization_c(n, alpha)


def extremal_concentration(n: int, alpha: float, measure: float) -> float:
    """C_B(1) for the centred ball B of the given spherical measure."""
    return _extremal_concentration(int(n), float(alpha), float(measure))


def faber_krahn_deficit(f: TestFunction, omega) -> float:
    """delta(f; omega, alpha) = 1 - C_omega(f) / C_B(1)."""
    return 1.0 - concentration(f, omega) / extremal_concentration(f.n, f.alpha, omega.measure)


def bathtub_gap(f: TestFunction, cap: Cap) -> float:
    """Mass on the super-level set of measure m_S(cap) minus mass on the cap (normalised)."""
    centred = Cap(ExtendedPoint.origin(f.n), cap.measure)
    return concentration(f, centred) - concentration(f, cap)


def translate_identity(n: int, alpha: float, x0: ExtendedPoint, measure: float, samples: int = 200_000,
                       seed: int = 0) -> tuple[float, MeanEstimate]:
    """(C_B(1), Monte Carlo estimate of C_{phi_x0(B)}(I_x0)).

    Points are drawn uniformly on S^n, dropped to the chart and pushed through
    phi_x0. Both the mass on phi_x0(B) and ||I_x0||^p are estimated from the same
    draws; the returned standard error is that of the ratio (delta method).
    """
    if x0.dim != n:
        raise DomainError("x0 dimension mismatch")
    rng = np.random.default_rng(seed)
    pts, inf = drop(_uniform_sphere(n + 1, samples, rng))
    pts = pts[~inf]
    img, img_inf = phi_points(x0, pts)
    r_img = np.where(img_inf, np.inf, np.linalg.norm(img, axis=1))
    g = weight_many(n, r_img, alpha)
    R = math.tan(float(angle_of_volume(n, measure)))
    h = g * (r_img < R)
    mh, mg = h.mean(), g.mean()
    ratio = mh / mg
    cov = np.cov(h, g)
    var = (cov[0, 0] - 2.0 * ratio * cov[0, 1] + ratio * ratio * cov[1, 1]) / (mg * mg * h.size)
    return extremal_concentration(n, alpha, measure), MeanEstimate(float(ratio), float(math.sqrt(max(var, 0.0))), h.size)


# ---------------------------------------------------------------------------
# Wehrl-type functionals


def _level_breaks(dens: RadialDensity, levels) -> list[float]:
    lv = [t for t in levels if 0.0 < t < dens.max_value]
    return [float(v) for v in level_angles(dens, lv)] if lv else []


def _wehrl(dens: RadialDensity, G: ConvexSpec) -> float:
    breaks = _level_breaks(dens, G.knots) if dens.monotone else []
    return radial_integral(dens.n, lambda th: G.value(dens.at_angle(th)), breaks=breaks)


def wehrl_value(f: TestFunction, G: ConvexSpec) -> float:
    """int G(|f|^p W^alpha) dm_S for f rescaled to unit norm (raw dm_S)."""
    return _wehrl(_density(f), G)


def wehrl_extremal(n: int, alpha: float, G: ConvexSpec) -> float:
    """int G(W^alpha) dm_S, the value at f = 1."""
    return _wehrl(RadialDensity.weight(n, alpha), G)


# ---------------------------------------------------------------------------
# tail integral of the extremal distribution function


def phi_tail(n: int, alpha: float, T: float) -> float:
    """phi(T) = int_T^1 rho_0(tau) dtau with rho_0(tau) = m_S{W^alpha > tau}.

    Substituting tau = W^alpha(r) gives int_0^{r_T} V(r) alpha |k(r)| W^alpha(r) dr,
    integrated in theta = arctan r so that no level inversion is needed inside
    the quadrature.
    """
    if not 0.0 <= T <= 1.0:
        raise DomainError("T must lie in [0, 1]")
    if T == 1.0:
        return 0.0
    if T == 0.0:
        return normalization_c(n, alpha)
    prof = radial_profile(n, -1.0)
    dens = RadialDensity.weight(n, alpha)
    th_T = float(level_angles(dens, T)[0])

    def integrand(th):
        r = np.tan(th)
        with np.errstate(under="ignore"):
            w = np.exp(alpha * prof.value(r))
        return cap_volume_angle(n, th) * alpha * np.abs(prof.derivative(r)) * w * (1.0 + r * r)

    return adaptive_quad(integrand, 0.0, th_T, abs_tol=1e-300, rel_tol=1e-12).value


@dataclass(frozen=True)
class PhiFit:
    """Least-squares fit of log phi(T) against log(1 - T)."""

    n: int
    alpha: float
    T: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)
    slope: float = 0.0
    intercept: float = 0.0
    r_squared: float = 0.0

    @property
    def log1mT(self) -> np.ndarray:
        return np.log1p(-self.T)

    @property
    def logphi(self) -> np.ndarray:
        return np.log(self.phi)


@lru_cache(maxsize=64)
def phi_fit(n: int, alpha: float, lo: float = 1e-4, hi: float = 1e-2, points: int = 40) -> PhiFit:
    """Fit over 1 - T log-spaced in [lo, hi]; the slope should approach n/2 + 1.

    The next term of phi is O(1 - T) relative, so the fitted slope is biased by
    roughly a multiple of ``hi``; the default window keeps that bias below 0.02
    for n <= 5 and alpha >= 1/2.
    """
    gap = np.geomspace(lo, hi, points)
    T = 1.0 - gap
    phi = np.array([phi_tail(n, alpha, float(t)) for t in T])
    x, y = np.log(gap), np.log(phi)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    r2 = 1.0 - float(resid @ resid) / float(((y - y.mean()) ** 2).sum())
    return PhiFit(n, alpha, T, phi, float(slope), float(intercept), r2)


# ---------------------------------------------------------------------------
# extremizer distance


def extremizer_overlap(f: TestFunction, x0: ExtendedPoint) -> float:
    """<|f|/||f||, I_x0> = (1/c) int sqrt(u_n) W^(alpha/2) o phi_x0 dm_S (p = 2)."""
    if f.p != 2:
        raise ParameterError("the Hilbert-space distance is defined for p = 2")
    dens = _density(f)
    n, half = f.n, 0.5 * f.alpha
    if x0.at_infinity:
        raise DomainError("x0 must be finite")
    a = x0.norm
    if a == 0.0:
        fn = lambda th: np.sqrt(dens.at_angle(th)) * weight_many(n, np.tan(th), half)  # noqa: E731
    else:
        mu, wts = axial_rule(n, _AXIAL_ORDER)

        def fn(th):
            th = np.asarray(th, dtype=float)
            rho = np.tan(th.ravel())
            img = phi_norm(a, rho[:, None], mu[None, :])
            mean = (weight_many(n, img, half) @ wts).reshape(th.shape)
            return np.sqrt(dens.at_angle(th)) * mean

    return radial_integral(n, fn) / normalization_c(n, f.alpha)


def translated_integral(n: int, g, offset: float, order: int = _AXIAL_ORDER) -> float:
    """int g(|phi_x0(x)|) dm_S for |x0| = offset, by Gauss-Jacobi quadrature over directions.

    ``g`` is a vectorised radial function (it may receive inf). By the invariance
    of m_S under phi_x0 the result equals int g(|x|) dm_S.
    """
    if offset == 0.0:
        return radial_integral(n, lambda th: g(np.tan(th)))
    mu, wts = axial_rule(n, order)

    def fn(th):
        th = np.asarray(th, dtype=float)
        rho = np.tan(th.ravel())
        vals = np.asarray(g(phi_norm(offset, rho[:, None], mu[None, :])), dtype=float) @ wts
        return vals.reshape(th.shape)

    return radial_integral(n, fn)


def extremizer_distance_sq(f: TestFunction, x0: ExtendedPoint | None = None) -> float:
    """||  |f|/||f|| - I_x0 ||^2 = 2 - 2 <|f|/||f||, I_x0>."""
    x0 = ExtendedPoint.origin(f.n) if x0 is None else x0
    return 2.0 - 2.0 * extremizer_overlap(f, x0)


def extremizer_distance(f: TestFunction, offsets=X0_GRID) -> tuple[float, float]:
    """(min over the |x0| grid of the distance, minimising |x0|)."""
    best, arg = math.inf, 0.0
    for a in offsets:
        coords = np.zeros(f.n)
        coords[0] = a
        d2 = extremizer_distance_sq(f, ExtendedPoint.finite(coords))
        d = math.sqrt(max(d2, 0.0))
        if d < best:
            best, arg = d, float(a)
    return best, arg


# ---------------------------------------------------------------------------
# stability


@dataclass(frozen=True)
class StabilityReport:
    """Quantities of the stability argument for one test function and one s0.

    ``gap`` is int_0^{s*} (v* - u*) ds / c(alpha); ``distance_sq`` is
    2 - 2 <|f|, I_0> (nan unless p = 2); ``phi_T`` is in raw dm_S units.
    """

    T: float
    s_star: float
    t_star: float
    delta_s0: float
    F_s0: float
    phi_T: float
    deficit_bound: float
    fitted_exponent: float
    s0: float = 0.0
    gap: float = 0.0
    distance_sq: float = 0.0
    c_alpha: float = 1.0

    def margins(self) -> dict:
        """Named slack of each inequality in the chain (non-negative when it holds)."""
        return {
            "gap_le_deficit_bound": self.deficit_bound - self.gap,
            "phi_le_gap": self.gap - self.phi_T / self.c_alpha,
            "distance_le_point_bound": 2.0 * (1.0 - math.sqrt(self.T)) - self.distance_sq,
            "T_le_one": 1.0 - self.T,
            "delta_nonnegative": self.delta_s0,
        }

    def as_row(self) -> dict:
        return asdict(self)


def crossing_angle(f: TestFunction) -> float:
    """arctan of the smallest radius where u_n = W^alpha; NoCrossing if they never meet."""
    dens = _density(f)
    ref = RadialDensity.weight(f.n, f.alpha)

    def diff(th):
        return dens.log_at_angle(th) - ref.log_at_angle(th)

    grid = np.linspace(0.0, HALF_PI, 4097)[:-1]
    vals = diff(grid)
    scale = max(1.0, float(np.max(np.abs(vals))))
    if np.all(np.abs(vals) <= 1e-13 * scale):
        raise NoCrossing("u* and v* coincide")
    sgn = np.sign(vals)
    idx = np.nonzero(sgn[1:] * sgn[:-1] < 0)[0]
    zero = np.nonzero(sgn == 0)[0]
    if zero.size and (not idx.size or zero[0] <= idx[0]):
        return float(grid[zero[0]])
    if not idx.size:
        raise NoCrossing("u* - v* keeps one sign")
    i = int(idx[0])
    return optimize.brentq(lambda th: float(diff(th)), grid[i], grid[i + 1], xtol=1e-15, rtol=1e-15)


def stability_report(f: TestFunction, s0: float) -> StabilityReport:
    """s*, t*, delta_{s0}, F(s0) and the chain gap <= delta F, phi(T) <= gap, distance bound."""
    n, alpha = f.n, f.alpha
    total = sphere_volume(n)
    if not 0.0 < s0 < total:
        raise DomainError(f"s0 must lie in (0, {total})")
    c = normalization_c(n, alpha)
    dens = _density(f)
    if not dens.monotone:
        raise DomainError("stability quantities are implemented for radially non-increasing densities")
    ref = RadialDensity.weight(n, alpha)
    th0 = float(angle_of_volume(n, s0))
    v_int = radial_integral(n, ref.at_angle, 0.0, th0) / c
    F = max(1.0, v_int / (1.0 - v_int))
    fit = phi_fit(n, alpha).slope
    dist_sq = extremizer_distance_sq(f) if f.p == 2 else math.nan
    try:
        th_star = crossing_angle(f)
    except NoCrossing:
        return StabilityReport(1.0, 0.0, 1.0, 0.0, F, 0.0, 0.0, fit, s0, 0.0,
                               0.0 if f.p == 2 else math.nan, c)
    u_int = radial_integral(n, dens.at_angle, 0.0, th0) / c
    delta = 1.0 - u_int / v_int
    T = dens.max_value
    gap = radial_integral(n, lambda th: ref.at_angle(th) - dens.at_angle(th), 0.0, th_star) / c
    return StabilityReport(
        T=T,
        s_star=float(cap_volume_angle(n, th_star)),
        t_star=float(ref.at_angle(th_star)),
        delta_s0=delta,
        F_s0=F,
        phi_T=phi_tail(n, alpha, min(T, 1.0)),
        deficit_bound=delta * F,
        fitted_exponent=fit,
        s0=s0,
        gap=gap,
        distance_sq=dist_sq,
        c_alpha=c,
    )


@dataclass(frozen=True)
class FamilyPoint:
    coefficient: float
    deficit: float
    distance: float
    ratio: float


def deficit_distance_family(n: int, coefficients, fraction: float = 0.5, alpha: float = 1.0,
                            m: int = 1) -> list[FamilyPoint]:
    """distance / delta^(2/(n+2)) along f_c = F_m^c for a centred cap of the given measure fraction."""
    cap = Cap.at(n, 0.0, fraction)
    out = []
    for coef in coefficients:
        f = TestFunction(n, 2.0, alpha, ((m, coef),))
        delta = faber_krahn_deficit(f, cap)
        dist, _ = extremizer_distance(f)
        ratio = dist / delta ** (2.0 / (n + 2)) if delta > 0 else math.inf
        out.append(FamilyPoint(float(coef), delta, dist, ratio))
    return out


def convex_stability_gap(f: TestFunction, G: ConvexSpec) -> tuple[float, float]:
    """(int_T^1 (G'(t) - G'_-(T)) rho_0(t) dt, int G(W^alpha) - int G(u_n)), raw dm_S."""
    if f.p < 1:
        raise ParameterError("the convex stability bound is stated for p >= 1")
    dens = _density(f)
    T = dens.max_value
    rhs = wehrl_extremal(f.n, f.alpha, G) - _wehrl(dens, G)
    if T >= 1.0:
        return 0.0, rhs
    ref = RadialDensity.weight(f.n, f.alpha)
    base = float(G.left_derivative(T))

    def integrand(t):
        t = np.asarray(t, dtype=float)
        return (G.derivative(t) - base) * distribution_many(ref, t.ravel()).reshape(t.shape)

    pts = [T, *[k for k in G.knots if T < k < 1.0], 1.0]
    lhs = sum(adaptive_quad(integrand, a, b, abs_tol=1e-13, rel_tol=1e-12).value
              for a, b in zip(pts[:-1], pts[1:]))
    return lhs, rhs
