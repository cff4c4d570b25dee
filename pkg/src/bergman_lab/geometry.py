"""Stereographic chart, spherical measure and the involutive isometries phi_x0.

Points of the extended space carry an explicit ``at_infinity`` flag. The bulk
helpers (``lift``, ``drop``, ``phi_points``) work on (N, n) arrays and return
an infinity mask alongside coordinates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, SingularityError


@dataclass(frozen=True)
class ExtendedPoint:
    coords: tuple
    at_infinity: bool = False

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(float(c) for c in self.coords))
        if not self.at_infinity and not all(math.isfinite(c) for c in self.coords):
            raise DomainError("finite point with non-finite coordinates")

    @classmethod
    def finite(cls, coords) -> "ExtendedPoint":
        return cls(tuple(np.asarray(coords, dtype=float).ravel()))

    @classmethod
    def infinity(cls, n: int) -> "ExtendedPoint":
        return cls((0.0,) * n, at_infinity=True)

    @classmethod
    def origin(cls, n: int) -> "ExtendedPoint":
        return cls((0.0,) * n)

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.coords)

    @property
    def norm(self) -> float:
        return math.inf if self.at_infinity else float(np.linalg.norm(self.coords))


@dataclass(frozen=True)
class SpherePoint:
    xi: np.ndarray = field(repr=False)

    def __post_init__(self):
        xi = np.array(self.xi, dtype=float)
        if abs(np.linalg.norm(xi) - 1.0) > 1e-12:
            raise DomainError("sphere point must have unit norm")
        xi.setflags(write=False)
        object.__setattr__(self, "xi", xi)


@dataclass(frozen=True)
class IsometryMatrix:
    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    def apply(self, xi: np.ndarray) -> np.ndarray:
        return np.asarray(xi) @ self.entries.T


def lift(x: np.ndarray) -> np.ndarray:
    """Stereographic lift of finite points, shape (N, n) -> (N, n+1)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    r2 = np.einsum("ij,ij->i", x, x)
    denom = 1.0 + r2
    return np.column_stack([2.0 * x / denom[:, None], (1.0 - r2) / denom])


def drop(xi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Inverse chart. Returns (coords, at_infinity mask); coords are 0 where infinite."""
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    head, last = xi[:, :-1], xi[:, -1]
    head_sq = np.einsum("ij,ij->i", head, head)
    at_inf = (last <= -1.0) | ((head_sq == 0.0) & (last < 0.0))
    out = np.zeros_like(head)
    north = (last >= 0.0) & ~at_inf
    south = (last < 0.0) & ~at_inf
    out[north] = head[north] / (1.0 + last[north])[:, None]
    # (1 + x_{n+1})(1 - x_{n+1}) = |head|^2 avoids cancellation near the south pole
    out[south] = head[south] * ((1.0 - last[south]) / head_sq[south])[:, None]
    return out, at_inf


def stereo_lift(x: ExtendedPoint) -> SpherePoint:
    if x.at_infinity:
        xi = np.zeros(x.dim + 1)
        xi[-1] = -1.0
        return SpherePoint(xi)
    return SpherePoint(lift(x.array)[0])


def stereo_drop(xi: SpherePoint) -> ExtendedPoint:
    coords, at_inf = drop(xi.xi)
    if at_inf[0]:
        return ExtendedPoint.infinity(xi.xi.size - 1)
    return ExtendedPoint.finite(coords[0])


def sphere_isometry(xi: SpherePoint) -> IsometryMatrix:
    """Symmetric orthogonal A with A e_{n+1} = xi (Householder reflection)."""
    v = np.asarray(xi.xi)
    dim = v.size
    w = -v.copy()
    head_sq = float(v[:-1] @ v[:-1])
    # 1 - xi_{n+1} = |head|^2 / (1 + xi_{n+1}) avoids cancellation near the north pole
    w[-1] = head_sq / (1.0 + v[-1]) if v[-1] > 0 else 1.0 - v[-1]
    scale = float(np.max(np.abs(w)))
    if scale == 0.0:
        return IsometryMatrix(np.eye(dim))
    w /= scale
    return IsometryMatrix(np.eye(dim) - (2.0 / float(w @ w)) * np.outer(w, w))


def _is_origin(x0: ExtendedPoint) -> bool:
    return not x0.at_infinity and not any(x0.coords)


def phi_points(x0: ExtendedPoint, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """phi_x0 applied to finite points x of shape (N, n)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if _is_origin(x0):
        return x.copy(), np.zeros(x.shape[0], dtype=bool)
    a = sphere_isometry(stereo_lift(x0))
    return drop(a.apply(lift(x)))


def phi_x0(x0: ExtendedPoint, x: ExtendedPoint) -> ExtendedPoint:
    """The involution S^-1 o psi_{S(x0)} o S; maps 0 to x0."""
    if _is_origin(x0):
        return x
    a = sphere_isometry(stereo_lift(x0))
    return stereo_drop(SpherePoint(a.apply(stereo_lift(x).xi)))


def measure_density(n: int, x: ExtendedPoint) -> float:
    """Density (2/(1+|x|^2))^n of the spherical measure."""
    if x.at_infinity:
        raise DomainError("measure density is undefined at infinity")
    return (2.0 / (1.0 + x.norm ** 2)) ** n


def sphere_volume(n: int) -> float:
    """Total volume of the unit n-sphere S^n."""
    return 2.0 * math.pi ** ((n + 1) / 2) / math.gamma((n + 1) / 2)


def surface_area(k: int) -> float:
    """Surface area sigma_k of the unit k-sphere S^k in R^{k+1}."""
    return sphere_volume(k)


def sphere_distance(xi: np.ndarray, eta: np.ndarray) -> np.ndarray:
    """Geodesic distance arccos<xi, eta>, evaluated in the cancellation-free form."""
    xi = np.atleast_2d(xi)
    eta = np.atleast_2d(eta)
    return 2.0 * np.arctan2(np.linalg.norm(xi - eta, axis=-1), np.linalg.norm(xi + eta, axis=-1))


def geodesic_radius(r):
    """Geodesic radius arccos((1-r^2)/(1+r^2)) = 2 arctan r of the Euclidean ball |x| < r."""
    return 2.0 * np.arctan(r)


def _pow2_step(scale: float) -> float:
    return 2.0 ** round(math.log2(scale))


def jacobian_residual(x0: ExtendedPoint, x: ExtendedPoint) -> float:
    """Relative residual of |det D phi_x0(x)| = (1+|phi(x)|^2)^n / (1+|x|^2)^n.

    The derivative is taken by central differences with step 1e-5 (1+|x|),
    rounded to a power of two so that x +- h is exact where possible.
    """
    if x.at_infinity:
        raise SingularityError("x must be finite")
    n = x.dim
    base = x.array
    y, inf = phi_points(x0, base)
    if inf[0]:
        raise SingularityError("phi_x0 maps x to infinity")
    h = _pow2_step(1e-5 * (1.0 + float(np.linalg.norm(base))))
    probes = np.concatenate([base + h * np.eye(n), base - h * np.eye(n)])
    vals, inf_p = phi_points(x0, probes)
    if inf_p.any():
        raise SingularityError("finite-difference stencil touches the pole of phi_x0")
    jac = (vals[:n] - vals[n:]).T / (2.0 * h)
    det = abs(float(np.linalg.det(jac)))
    rhs = ((1.0 + float(y[0] @ y[0])) / (1.0 + float(base @ base))) ** n
    return (det - rhs) / rhs


def phi_norm(a: float, rho, s):
    """|phi_x0(y)| for |x0| = a, |y| = rho and cos(angle(x0, y)) = s.

    Uses |phi_x0(y)|^2 = |y - x0|^2 / (1 + 2 y.x0 + |x0|^2 |y|^2), which follows
    from the chordal distance between the lifted points; inf at the pole.
    """
    rho = np.asarray(rho, dtype=float)
    s = np.asarray(s, dtype=float)
    num = rho * rho - 2.0 * a * rho * s + a * a
    den = 1.0 + 2.0 * a * rho * s + a * a * rho * rho
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.sqrt(np.maximum(num, 0.0) / den)
    return np.where(den <= 0.0, np.inf, out)
