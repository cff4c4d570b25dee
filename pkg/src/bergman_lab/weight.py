"""Radial solutions u_c of Delta_S log u = c (1+r^2)^(-m) and the Bergman weight W_n.

With t = r^2/(1+r^2) and w = 1 - t = 1/(1+r^2) the log-derivative is

    k(r) = (4c/n) r (1+r^2)^(n/2-2) H(t),   H = 2F1(n/2, 1-m-n/2; n/2+1; t),

which is the Pfaff image of the form with argument -r^2. For t > 1/2 the
factor is evaluated through its complementary representation

    H(t) = t^(-a) [K - (a/d) w^d 2F1(d, 1-a; d+1; w)],   a = n/2, d = m + a,

where K = Gamma(a+1)Gamma(d)/Gamma(a+d). The term K t^(-a) is annihilated by
the radial Laplacian, so the Laplacian of log u is obtained without the
catastrophic cancellation of the second-order display at large r.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DomainError
from .geometry import surface_area
from .specfun import adaptive_quad, hyp2f1, hyp2f1_derivative

_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)
GRID = np.concatenate([[0.0], np.geomspace(1e-4, 1e3, 512)])
# beyond the grid the cumulative integral continues on doubling panels
_TAIL_KNOTS = GRID[-1] * 2.0 ** np.arange(1, 64)
_KNOTS = np.concatenate([GRID, _TAIL_KNOTS])


def gamma_ratio(n: int, m: int = 0) -> float:
    """K = Gamma(n/2+1) Gamma(m+n/2) / Gamma(n+m), the limit of H at t = 1."""
    a = 0.5 * n
    return math.exp(math.lgamma(a + 1.0) + math.lgamma(m + a) - math.lgamma(n + m))


def _split(r):
    r = np.asarray(r, dtype=float)
    r2 = r * r
    w = 1.0 / (1.0 + r2)
    t = r2 * w
    return t, w


def profile_factor(n: int, m: int, r):
    """H(t(r)) and the normalised ODE ratio (nH + 2tH') / (n w^(d-1)), which should be 1."""
    t, w = _split(r)
    t = np.atleast_1d(t)
    w = np.atleast_1d(w)
    a = 0.5 * n
    d = m + a
    H = np.empty_like(t)
    ratio = np.empty_like(t)
    lo = t <= 0.5
    if lo.any():
        tl = t[lo]
        h = hyp2f1(a, 1.0 - d, a + 1.0, tl)
        hp = hyp2f1_derivative(a, 1.0 - d, a + 1.0, tl)
        H[lo] = h
        ratio[lo] = (n * h + 2.0 * tl * hp) / (n * w[lo] ** (d - 1.0))
    hi = ~lo
    if hi.any():
        th, wh = t[hi], w[hi]
        g = hyp2f1(d, 1.0 - a, d + 1.0, wh)
        gp = hyp2f1_derivative(d, 1.0 - a, d + 1.0, wh)
        H[hi] = th ** (-a) * (gamma_ratio(n, m) - (a / d) * wh ** d * g)
        ratio[hi] = th ** (1.0 - a) * (g + wh * gp / d)
    return H, ratio


def _unit_k(n: int, m: int, r):
    r = np.asarray(r, dtype=float)
    H, _ = profile_factor(n, m, r.ravel())
    w = 1.0 / (1.0 + r.ravel() ** 2)
    # (1+r^2)^(n/2-2) written through w keeps r -> inf finite
    out = (4.0 / n) * r.ravel() * w ** (2.0 - 0.5 * n) * H
    return out.reshape(r.shape)


def _gl_panel(n: int, m: int, lo, hi):
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    x = mid[..., None] + half[..., None] * _GL_X
    return half * (_unit_k(n, m, x) @ _GL_W)


@lru_cache(maxsize=None)
def _unit_table(n: int, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Cumulative integral of the unit (c = 1) log-derivative at every knot."""
    pieces = _gl_panel(n, m, _KNOTS[:-1], _KNOTS[1:])
    cum = np.concatenate([[0.0], np.cumsum(pieces)])
    deriv = _unit_k(n, m, _KNOTS)
    cum.setflags(write=False)
    deriv.setflags(write=False)
    return cum, deriv


def _unit_value(n: int, m: int, r):
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise DomainError("radius must be non-negative")
    cum, _ = _unit_table(n, m)
    flat = r.ravel()
    out = np.empty_like(flat)
    inf = ~np.isfinite(flat) | (flat >= _KNOTS[-1])
    fin = ~inf
    if fin.any():
        j = np.searchsorted(_KNOTS, flat[fin], side="right") - 1
        out[fin] = cum[j] + _gl_panel(n, m, _KNOTS[j], flat[fin])
    if inf.any():
        # k ~ K r^(n-3) at infinity, so the integral always diverges
        out[inf] = np.inf
    return out.reshape(r.shape)


@dataclass(frozen=True)
class RadialProfile:
    """log u_c for Delta_S log u = c (1+r^2)^(-m), tabulated on the standard grid.

    Grid values are the exact cumulative Gauss-Legendre integrals; any other
    radius is evaluated by one extra 16-point panel from the nearest knot
    below it, so there is no interpolation error.
    """

    n: int
    c: float
    m: int = 0
    radii: np.ndarray = field(init=False, repr=False)
    values: np.ndarray = field(init=False, repr=False)
    derivatives: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.n < 2:
            raise DomainError("dimension must be at least 2")
        if self.m < 0:
            raise DomainError("source exponent m must be non-negative")
        cum, deriv = _unit_table(self.n, self.m)
        size = GRID.size
        object.__setattr__(self, "radii", GRID)
        object.__setattr__(self, "values", self.c * cum[:size])
        object.__setattr__(self, "derivatives", self.c * deriv[:size])

    def value(self, r):
        """h_c(r) = log u_c(r)."""
        if self.c == 0.0:
            out = np.zeros_like(np.asarray(r, dtype=float))
        else:
            out = self.c * _unit_value(self.n, self.m, r)
        return float(out) if np.ndim(out) == 0 else out

    def derivative(self, r):
        """k_c(r) = d/dr log u_c(r)."""
        out = self.c * _unit_k(self.n, self.m, r)
        return float(out) if np.ndim(out) == 0 else out

    def u(self, r):
        with np.errstate(under="ignore"):
            return np.exp(self.value(r))

    def laplacian(self, r):
        """Radial Delta_S log u_c(r), evaluated through the split representation."""
        _, w = _split(r)
        _, ratio = profile_factor(self.n, self.m, np.ravel(r))
        out = self.c * np.atleast_1d(w) ** self.m * ratio
        return float(out[0]) if np.ndim(r) == 0 else out.reshape(np.shape(r))


@lru_cache(maxsize=64)
def radial_profile(n: int, c: float, m: int = 0) -> RadialProfile:
    return RadialProfile(n, float(c), m)


def k_profile(n: int, c: float, r):
    """k_c(r) = (4c/n) r (1+r^2)^(n-2) 2F1(n/2, n; n/2+1; -r^2), via the Pfaff image."""
    return radial_profile(n, c).derivative(r)


def h_profile(n: int, c: float, r: float) -> float:
    """log u_c(r) by adaptive quadrature of k_c (absolute tolerance 1e-10)."""
    if r < 0:
        raise DomainError("radius must be non-negative")
    if r == 0.0 or c == 0.0:
        return 0.0
    res = adaptive_quad(lambda x: k_profile(n, c, x), 0.0, float(r), abs_tol=1e-10, rel_tol=1e-14)
    return res.value


def weight_W(n: int, r: float) -> float:
    """W_n(r) = u_{-1}(r); equals 1 at the origin and decreases strictly."""
    return math.exp(h_profile(n, -1.0, r))


def weight_many(n: int, r, alpha: float = 1.0):
    """Vectorised W_n^alpha through the cached profile."""
    with np.errstate(under="ignore"):
        return np.exp(alpha * radial_profile(n, -1.0).value(r))


def radial_measure_angle(n: int, theta):
    """Density of dm_S in the angle variable theta = arctan r: 2^n sigma_{n-1} (sin cos)^(n-1)."""
    theta = np.asarray(theta, dtype=float)
    return 2.0 ** n * surface_area(n - 1) * (np.sin(theta) * np.cos(theta)) ** (n - 1)


@lru_cache(maxsize=None)
def normalization_c(n: int, alpha: float) -> float:
    """c(alpha) = int W_n^alpha dm_S (relative tolerance well below 1e-9)."""
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    prof = radial_profile(n, -1.0)

    def integrand(theta):
        with np.errstate(under="ignore", over="ignore"):
            return np.exp(alpha * prof.value(np.tan(theta))) * radial_measure_angle(n, theta)

    return adaptive_quad(integrand, 0.0, 0.5 * math.pi, abs_tol=1e-13, rel_tol=1e-13).value


def ode_residual(n: int, c: float, r: float) -> float:
    """LHS of ((1+r^2)/4)[(1+r^2)k' + k((1+r^2)(n-1) + 2(2-n)r^2)/r] minus c.

    The bracket is reduced to (1/4) w^(1-n/2) (n q + 2t q'(t)) with k = r(1+r^2)^(n/2-2) q,
    and q' comes from the contiguous derivative relation of 2F1.
    """
    if not r > 0:
        raise DomainError("ode_residual needs r > 0")
    if c == 0.0:
        return 0.0
    return float(radial_profile(n, c).laplacian(r) - c)


def ode_residual_direct(n: int, c: float, r: float, step: float = 1e-6) -> float:
    """Same residual from the literal display, with k' by central differences (cross-check only)."""
    h = step * max(1.0, r)
    kp = (k_profile(n, c, r + h) - k_profile(n, c, r - h)) / (2.0 * h)
    k = k_profile(n, c, r)
    s = 1.0 + r * r
    return 0.25 * s * (s * kp + k * (s * (n - 1) + 2.0 * (2 - n) * r * r) / r) - c


def sandwich_bounds(n: int, c: float, r):
    """(lower, upper) exponential bounds on u_c(r) for n > 2.

    The two candidates are exp(e(r)) and exp(K e(r)) with
    e(r) = 4c((1+r^2)^((n-2)/2) - 1)/(n(n-2)) and K = Gamma(1+n/2)Gamma(n/2)/Gamma(n);
    since 0 < K < 1 the one without K is the lower bound when c < 0.
    """
    if n <= 2:
        raise DomainError("sandwich bounds need n > 2")
    r = np.asarray(r, dtype=float)
    e = 4.0 * c * np.expm1(0.5 * (n - 2) * np.log1p(r * r)) / (n * (n - 2))
    with np.errstate(under="ignore"):
        plain = np.exp(e)
        scaled = np.exp(gamma_ratio(n) * e)
    lower, upper = np.minimum(plain, scaled), np.maximum(plain, scaled)
    if lower.ndim == 0:
        return float(lower), float(upper)
    return lower, upper


def sandwich_check(n: int, c: float, r: float, rel_slack: float = 1e-12) -> bool:
    """True iff u_c(r) lies between the two bounds (c < 0)."""
    if not c < 0:
        raise DomainError("sandwich_check is stated for c < 0")
    lower, upper = sandwich_bounds(n, c, r)
    u = float(radial_profile(n, c).u(r))
    return lower * (1.0 - rel_slack) <= u <= upper * (1.0 + rel_slack)
