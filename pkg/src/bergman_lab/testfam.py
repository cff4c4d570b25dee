"""Radial log-subharmonic test functions built from the profiles F_m.

F_m solves Delta_S log F_m = c_m (1+r^2)^(-m) with F_m(0) = 1. Products of
such factors raised to the power p and multiplied by W_n^alpha give the
densities u = |f|^p W_n^alpha on which every functional is evaluated.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import optimize

from .errors import DomainError, ParameterError
from .specfun import adaptive_quad
from .weight import gamma_ratio, normalization_c, radial_measure_angle, radial_profile


def membership_threshold(n: int) -> float:
    """Gamma(n/2)Gamma(n/2+1)/Gamma(n)."""
    return gamma_ratio(n, 0)


@dataclass(frozen=True)
class TestFunction:
    """f = prod_k F_{m_k} with coefficients c_k >= 0, measured in the (alpha, p) norm."""

    __test__ = False  # not a pytest class

    n: int
    p: float = 2.0
    alpha: float = 1.0
    terms: tuple = field(default=())

    def __post_init__(self):
        terms = tuple((int(m), float(c)) for m, c in self.terms)
        object.__setattr__(self, "terms", terms)
        if self.n < 3:
            raise DomainError("test functions are defined for n >= 3")
        if not (self.p > 0 and self.alpha > 0):
            raise ParameterError("p and alpha must be positive")
        for m, c in terms:
            if m < 1:
                raise ParameterError(f"term exponent must be >= 1, got {m}")
            if c < 0:
                raise ParameterError(f"coefficients must be non-negative, got {c}")
        if not membership_margin(self) > 0:
            raise ParameterError("membership margin p * sum(c) < alpha * threshold is violated")

    @property
    def is_constant(self) -> bool:
        return all(c == 0.0 for _, c in self.terms)

    def with_params(self, p: float | None = None, alpha: float | None = None) -> "TestFunction":
        return TestFunction(self.n, self.p if p is None else p, self.alpha if alpha is None else alpha, self.terms)

    def log_f(self, r):
        """log prod F_{m_k}(r)."""
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        for m, c in self.terms:
            if c:
                out = out + radial_profile(self.n, c, m).value(r)
        return out

    def log_f_derivative(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        for m, c in self.terms:
            if c:
                out = out + radial_profile(self.n, c, m).derivative(r)
        return out

    def log_density(self, r):
        """log(|f|^p W_n^alpha)(r)."""
        return self.p * self.log_f(r) + self.alpha * radial_profile(self.n, -1.0).value(r)

    def density(self, r):
        with np.errstate(under="ignore", invalid="ignore"):
            out = np.exp(self.log_density(r))
        out = np.where(np.isinf(np.asarray(r, dtype=float)), 0.0, out)
        return float(out) if out.ndim == 0 else out

    def density_derivative(self, r):
        """d/dr of the density, via (p (log f)' + alpha k_{-1}) u."""
        lk = self.p * self.log_f_derivative(r) + self.alpha * radial_profile(self.n, -1.0).derivative(r)
        return lk * self.density(r)

    @cached_property
    def norm_p(self) -> float:
        """||f||^p = (1/c(alpha)) int |f|^p W_n^alpha dm_S."""
        if self.is_constant:
            return 1.0

        def integrand(theta):
            with np.errstate(under="ignore", over="ignore"):
                return np.exp(self.log_density(np.tan(theta))) * radial_measure_angle(self.n, theta)

        raw = adaptive_quad(integrand, 0.0, 0.5 * math.pi, abs_tol=1e-14, rel_tol=1e-13).value
        return raw / normalization_c(self.n, self.alpha)

    @property
    def max_normalized(self) -> float:
        """T = max of |f|^p W_n^alpha / ||f||^p."""
        return self.peak[1] / self.norm_p

    @cached_property
    def peak(self) -> tuple[float, float]:
        """(radius, value) of the maximum of the density."""
        return locate_maximum(self)


def logF_derivative(n: int, m: int, c_m: float, r):
    """d/dr log F_m(r) = (4 c_m/n) r (1+r^2)^(n/2-2) 2F1(n/2, 1-m-n/2; n/2+1; r^2/(1+r^2))."""
    if np.any(np.asarray(r) < 0):
        raise DomainError("radius must be non-negative")
    return radial_profile(n, c_m, m).derivative(r)


def logF(n: int, m: int, c_m: float, r):
    return radial_profile(n, c_m, m).value(r)


def logF_upper_bound(n: int, c_m: float, r):
    """log of exp{4c_m((1+r^2)^((n-2)/2) - 1)/(n(n-2))}, an upper bound for log F_m when c_m >= 0."""
    r = np.asarray(r, dtype=float)
    return 4.0 * c_m * np.expm1(0.5 * (n - 2) * np.log1p(r * r)) / (n * (n - 2))


def u_density(f: TestFunction, r):
    """|f(r)|^p W_n^alpha(r)."""
    if np.any(np.asarray(r) < 0):
        raise DomainError("radius must be non-negative")
    return f.density(r)


def laplace_log_residual(f: TestFunction, r):
    """Delta_S log prod F_{m_k} minus sum_k c_k (1+r^2)^(-m_k)."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("residual is evaluated at r > 0")
    w = 1.0 / (1.0 + r * r)
    out = np.zeros_like(r)
    for m, c in f.terms:
        if c:
            out = out + (radial_profile(f.n, c, m).laplacian(r) - c * w ** m)
    return float(out) if out.ndim == 0 else out


def laplace_log_density(f: TestFunction, r):
    """Delta_S log(|f|^p W_n^alpha) = p sum c_k (1+r^2)^(-m_k) - alpha (from the profiles)."""
    r = np.asarray(r, dtype=float)
    out = f.alpha * radial_profile(f.n, -1.0).laplacian(r)
    for m, c in f.terms:
        if c:
            out = out + f.p * radial_profile(f.n, c, m).laplacian(r)
    return out


def membership_margin(f: TestFunction) -> float:
    """alpha * Gamma(n/2)Gamma(n/2+1)/Gamma(n) - p * sum(c_k)."""
    return f.alpha * membership_threshold(f.n) - f.p * sum(c for _, c in f.terms)


def locate_maximum(f: TestFunction, r_max: float = 1e3) -> tuple[float, float]:
    """Coarse log-spaced scan followed by bounded golden-section refinement of log u."""
    if f.is_constant:
        return 0.0, 1.0
    grid = np.concatenate([[0.0], np.geomspace(1e-4, r_max, 400)])
    vals = f.log_density(grid)
    i = int(np.argmax(vals))
    if i == 0 and vals[1] <= vals[0]:
        # the density has a strict local maximum at the origin (k(0) = 0, u'' < 0 nearby)
        return 0.0, 1.0
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, grid.size - 1)]
    res = optimize.minimize_scalar(lambda r: -float(f.log_density(r)), bounds=(lo, hi),
                                   method="bounded", options={"xatol": 1e-12 * max(1.0, hi)})
    r_star = float(res.x)
    best = max(float(f.log_density(r_star)), float(vals[i]))
    return r_star, math.exp(best)


def default_family(n: int, p: float = 2.0, alpha: float = 1.0) -> list[TestFunction]:
    """Six representative members used by the verification sweeps."""
    specs = [
        ((1, 0.05),),
        ((1, 0.1),),
        ((2, 0.1),),
        ((1, 0.05), (2, 0.05)),
        ((3, 0.12),),
        ((1, 0.02), (2, 0.03), (3, 0.05)),
    ]
    return [TestFunction(n, p, alpha, s) for s in specs]
