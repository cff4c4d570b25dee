"""Spherical caps centred at the origin: volume, perimeter, inverse radius and Theta.

Caps are parameterised by the Euclidean stereographic radius r. Internally the
angle theta = arctan r is used (the geodesic radius is 2*theta), because both
t = sin^2(theta) and 1 - t = cos^2(theta) are then available without
cancellation and V(r) = total * I_t(n/2, n/2).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import special

from .errors import BracketError, DomainError
from .geometry import sphere_volume, surface_area
from .specfun import invert_monotone


def _volume_from_angle(n: int, theta):
    theta = np.asarray(theta, dtype=float)
    a = 0.5 * n
    total = sphere_volume(n)
    s2 = np.sin(theta) ** 2
    c2 = np.cos(theta) ** 2
    low = theta <= 0.25 * math.pi
    # I_t(a, a) = 1 - I_{1-t}(a, a); use whichever argument is small
    return np.where(low, total * special.betainc(a, a, s2), total - total * special.betainc(a, a, c2))


def cap_volume_angle(n: int, theta):
    """m_S of the ball |x| < tan(theta), theta in [0, pi/2]."""
    out = _volume_from_angle(n, theta)
    return float(out) if np.ndim(out) == 0 else out


def cap_volume(n: int, r):
    """Spherical measure 2^n sigma_{n-1} int_0^r tau^{n-1} (1+tau^2)^{-n} dtau; r may be inf."""
    return cap_volume_angle(n, np.arctan(np.asarray(r, dtype=float)))


def cap_perimeter(n: int, r):
    """sigma_{n-1} 2^{n-1} r^{n-1} / (1+r^2)^{n-1}."""
    r = np.asarray(r, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        ratio = np.where(np.isinf(r), 0.0, r / (1.0 + r * r))
    out = surface_area(n - 1) * (2.0 * ratio) ** (n - 1)
    return float(out) if np.ndim(out) == 0 else out


def cap_perimeter_angle(n: int, theta):
    out = surface_area(n - 1) * np.sin(2.0 * np.asarray(theta, dtype=float)) ** (n - 1)
    return float(out) if np.ndim(out) == 0 else out


def angle_of_volume(n: int, v):
    """Vectorised inverse of cap_volume_angle (incomplete-beta inverse + Newton polish)."""
    v = np.asarray(v, dtype=float)
    total = sphere_volume(n)
    a = 0.5 * n
    y = v / total
    low = y <= 0.5
    with np.errstate(invalid="ignore"):
        t_low = special.betaincinv(a, a, np.where(low, y, 0.5))
        t_high = special.betaincinv(a, a, np.where(low, 0.5, 1.0 - y))
    theta = np.where(low, np.arcsin(np.sqrt(t_low)), np.arccos(np.sqrt(t_high)))
    for _ in range(3):
        dv = cap_perimeter_angle(n, theta) * 2.0
        step = np.where(dv > 0, (_volume_from_angle(n, theta) - v) / np.where(dv > 0, dv, 1.0), 0.0)
        theta = np.clip(theta - step, 0.0, 0.5 * math.pi)
    return theta


def radius_of_volume(n: int, v):
    """Vectorised R(v); v = total gives inf."""
    return np.tan(angle_of_volume(n, v))


def inverse_volume(n: int, v: float) -> float:
    """R(v): the Euclidean radius of the centred cap of spherical measure v."""
    total = sphere_volume(n)
    if not 0.0 < v < total:
        raise BracketError(f"volume {v} outside (0, {total})")
    tol = 1e-12 * min(1.0, v)
    theta = invert_monotone(lambda th: cap_volume_angle(n, th), v, 0.0, 0.5 * math.pi, tol=tol)
    return math.tan(theta)


def theta(n: int, v: float) -> float:
    """Isoperimetric profile Theta(v) = v / P(R(v))^2."""
    total = sphere_volume(n)
    if not 0.0 < v < total:
        raise DomainError(f"Theta is defined on (0, {total}), got {v}")
    th = math.atan(inverse_volume(n, v))
    return v / cap_perimeter_angle(n, th) ** 2


def theta_many(n: int, v):
    """Vectorised Theta for arrays of volumes in (0, total)."""
    v = np.asarray(v, dtype=float)
    return v / cap_perimeter_angle(n, angle_of_volume(n, v)) ** 2


def theta_power_law(n: int, lo: float = 1e-6, hi: float = 1e-3, points: int = 40) -> tuple[float, float]:
    """Least-squares (slope, intercept) of log Theta against log v on [lo, hi] * vol(S^n)."""
    v = sphere_volume(n) * np.geomspace(lo, hi, points)
    slope, intercept = np.polyfit(np.log(v), np.log(theta_many(n, v)), 1)
    return float(slope), float(intercept)


def geodesic_to_euclidean(d):
    """Euclidean stereographic radius of the cap with geodesic radius d."""
    return np.tan(0.5 * np.asarray(d, dtype=float))


STANDARD_GRID = np.concatenate([[0.0], np.geomspace(1e-4, 1e3, 512)])


@dataclass(frozen=True)
class CapGeometry:
    """Centred caps of S^n with V and P tabulated on the standard radius grid."""

    n: int
    radii: np.ndarray = field(default_factory=lambda: STANDARD_GRID.copy(), repr=False)

    def __post_init__(self):
        if self.n < 2:
            raise DomainError("dimension must be at least 2")

    @property
    def total_volume(self) -> float:
        return sphere_volume(self.n)

    @property
    def volumes(self) -> np.ndarray:
        return cap_volume(self.n, self.radii)

    @property
    def perimeters(self) -> np.ndarray:
        return cap_perimeter(self.n, self.radii)

    def volume(self, r):
        return cap_volume(self.n, r)

    def perimeter(self, r):
        return cap_perimeter(self.n, r)

    def radius(self, v: float) -> float:
        return inverse_volume(self.n, v)

    def theta(self, v: float) -> float:
        return theta(self.n, v)


@lru_cache(maxsize=None)
def cap_geometry(n: int) -> CapGeometry:
    return CapGeometry(n)
