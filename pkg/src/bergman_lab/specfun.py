"""Numeric kernels: Gauss hypergeometric 2F1, Gamma, adaptive quadrature, monotone inversion.

All routines are pure functions. ``gauss_2f1`` and ``adaptive_quad`` accept
numpy arrays where noted so that radial integrands can be evaluated in bulk.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import optimize, special

from .errors import BracketError, ConvergenceError, DomainError, ToleranceNotMet

SERIES_CAP = 1_000_000
_EPS = np.finfo(float).eps


def _is_nonpositive_int(x: float) -> bool:
    return x <= 0 and float(x).is_integer()


@dataclass(frozen=True)
class HypParams:
    """Parameters (a, b; c) of 2F1."""

    a: float
    b: float
    c: float

    def __post_init__(self):
        if _is_nonpositive_int(self.c):
            raise DomainError(f"c = {self.c} is a non-positive integer")

    @property
    def excess(self) -> float:
        """c - a - b, the exponent governing behaviour at z = 1."""
        return self.c - self.a - self.b

    @property
    def terminating(self) -> bool:
        return _is_nonpositive_int(self.a) or _is_nonpositive_int(self.b)


@dataclass(frozen=True)
class QuadResult:
    value: float
    error_estimate: float
    intervals: int = 1
    transform: str = "none"


def _series_block(a, b, c, z, zmax):
    """Truncated series as one power-matrix product; the term count covers the tail at zmax."""
    head = int(abs(a) + abs(b) + abs(c)) + 8
    count = head + int(math.ceil(math.log(0.01 * _EPS) / math.log(zmax)))
    k = np.arange(count - 1, dtype=float)
    ratios = (a + k) * (b + k) / ((c + k) * (k + 1.0))
    coef = np.concatenate([[1.0], np.cumprod(ratios)])
    # the tail is dominated by a geometric series once the ratio has settled
    last = abs(coef[-1]) * zmax ** (count - 1)
    if last * zmax / (1.0 - zmax) > 0.25 * _EPS * max(1.0, float(np.abs(coef).max())):
        return None
    powers = np.power(z[..., None], np.arange(count, dtype=float))
    return powers @ coef


def _series(a, b, c, z, cap=SERIES_CAP):
    """Direct Kahan-compensated power series for 0 <= z < 1 (array z)."""
    z = np.asarray(z, dtype=float)
    total = np.ones_like(z)
    comp = np.zeros_like(z)
    term = np.ones_like(z)
    active = np.ones(z.shape, dtype=bool)
    bound = np.maximum(z, 0.0)
    zmax = float(bound.max()) if bound.size else 0.0
    if zmax > 0.0 and not (_is_nonpositive_int(a) or _is_nonpositive_int(b)):
        needed = math.log(_EPS) / math.log(zmax) if zmax < 1.0 else math.inf
        if needed > cap:
            raise ConvergenceError(f"2F1 series needs ~{needed:.3g} terms at z={zmax}, cap is {cap}")
    if 0.0 < zmax <= 0.75 and z.size > 1:
        out = _series_block(a, b, c, z, zmax)
        if out is not None:
            return out
    for k in range(cap):
        term = term * ((a + k) * (b + k) / ((c + k) * (k + 1))) * z
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
        if not np.any(term):
            return total
        # tail bound once the term ratio has settled below the geometric rate
        if k > abs(a) + abs(b) + abs(c):
            tail = np.abs(term) * bound / (1.0 - bound)
            active = tail > 0.25 * _EPS * np.abs(total)
            if not active.any():
                return total
    raise ConvergenceError(f"2F1 series did not converge in {cap} terms (max z={bound.max()})")


def _gauss_sum(p: HypParams) -> float:
    if p.excess <= 0:
        raise DomainError("2F1 at z=1 requires c - a - b > 0")
    return math.gamma(p.c) * math.gamma(p.excess) * special.rgamma(p.c - p.a) * special.rgamma(p.c - p.b)


def _hyp_unit(p: HypParams, z: np.ndarray, w_all: np.ndarray | None = None) -> np.ndarray:
    """2F1 on 0 <= z < 1; ``w_all`` optionally carries an exact 1 - z."""
    out = np.empty_like(z)
    d = p.excess
    near = z > 0.5
    if p.terminating:
        return _series(p.a, p.b, p.c, z)
    if float(d).is_integer():
        if d < 0 and near.any():
            # Euler: (1-z)^d 2F1(c-a, c-b; c; z) has terms decaying like k^(d-1)
            if (~near).any():
                out[~near] = _series(p.a, p.b, p.c, z[~near])
            w = 1.0 - z[near] if w_all is None else w_all[near]
            out[near] = np.power(w, d) * _series(p.c - p.a, p.c - p.b, p.c, z[near])
            return out
        # logarithmic case: sum directly up to the cap
        return _series(p.a, p.b, p.c, z)
    if (~near).any():
        out[~near] = _series(p.a, p.b, p.c, z[~near])
    if near.any():
        w = 1.0 - z[near] if w_all is None else w_all[near]
        g_c = math.gamma(p.c)
        c1 = g_c * math.gamma(d) * special.rgamma(p.c - p.a) * special.rgamma(p.c - p.b)
        c2 = g_c * math.gamma(-d) * special.rgamma(p.a) * special.rgamma(p.b)
        first = _series(p.a, p.b, 1.0 - d, w) if c1 else 0.0
        second = _series(p.c - p.a, p.c - p.b, d + 1.0, w) if c2 else 0.0
        out[near] = c1 * first + c2 * np.power(w, d) * second
    return out


def hyp2f1(a: float, b: float, c: float, z):
    """Vectorised 2F1(a, b; c; z) for real z <= 1.

    Negative arguments go through the Pfaff transformation
    2F1(a,b;c;z) = (1-z)^(-b) 2F1(c-a,b;c;z/(z-1)); arguments in (1/2, 1)
    use the z -> 1-z connection formula when c-a-b is not an integer and the
    Euler transformation when c-a-b is a negative integer.
    """
    p = HypParams(float(a), float(b), float(c))
    z_arr = np.asarray(z, dtype=float)
    scalar = z_arr.ndim == 0
    z_arr = np.atleast_1d(z_arr)
    if np.any(z_arr > 1.0):
        raise DomainError("2F1 is only evaluated for z <= 1")
    out = np.empty_like(z_arr)
    one = z_arr == 1.0
    if one.any():
        out[one] = _gauss_sum(p)
    pos = (z_arr >= 0.0) & ~one
    if pos.any():
        out[pos] = _hyp_unit(p, z_arr[pos])
    neg = z_arr < 0.0
    if neg.any():
        zn = z_arr[neg]
        w = zn / (zn - 1.0)
        # the identity is symmetric in a and b; keep the variant whose series terminates
        first, second = (p.a, p.b)
        if _is_nonpositive_int(p.c - p.b) and not _is_nonpositive_int(p.c - p.a):
            first, second = p.b, p.a
        q = HypParams(p.c - first, second, p.c)
        out[neg] = np.power(1.0 - zn, -second) * _hyp_unit(q, w, 1.0 / (1.0 - zn))
    return float(out[0]) if scalar else out


def gauss_2f1(params: HypParams, z: float) -> float:
    """2F1(a, b; c; z) for scalar z < 1, or z = 1 when c - a - b > 0."""
    return float(hyp2f1(params.a, params.b, params.c, float(z)))


def hyp2f1_derivative(a: float, b: float, c: float, z):
    """d/dz 2F1(a,b;c;z) = (ab/c) 2F1(a+1,b+1;c+1;z)."""
    factor = a * b / c
    if factor == 0.0:
        return np.zeros_like(np.asarray(z, dtype=float)) if np.ndim(z) else 0.0
    return factor * hyp2f1(a + 1.0, b + 1.0, c + 1.0, z)


def gamma_fn(x: float) -> float:
    """Gamma function for x > 0."""
    if not x > 0:
        raise DomainError(f"gamma_fn requires x > 0, got {x}")
    return math.gamma(x)


# Gauss-Kronrod 7/15 nodes and weights (QUADPACK qk15).
_XK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XK[:-1], _XK[::-1]])
_KWEIGHTS = np.concatenate([_WK[:-1], _WK[::-1]])
# Gauss nodes are the odd-indexed Kronrod nodes (1, 3, 5, centre, ...)
_GWEIGHTS = np.zeros(15)
_GWEIGHTS[[1, 3, 5]] = _WG[:3]
_GWEIGHTS[7] = _WG[3]
_GWEIGHTS[[9, 11, 13]] = _WG[2::-1]


def _batch_eval(f: Callable, x: np.ndarray) -> np.ndarray:
    try:
        y = np.asarray(f(x), dtype=float)
        if y.shape == x.shape:
            return y
    except (TypeError, ValueError):
        pass
    return np.array([float(f(v)) for v in x.ravel()]).reshape(x.shape)


def adaptive_quad(f: Callable, a: float, b: float, abs_tol: float = 1e-10,
                  rel_tol: float = 0.0, max_intervals: int = 50_000) -> QuadResult:
    """Integrate ``f`` over [a, b] with bisection-refined Gauss-Kronrod 7/15 panels.

    ``f`` is called with numpy arrays when it supports them. An infinite upper
    limit is mapped onto [0, 1) by r = a + t/(1-t). Each panel is accepted when
    |K15 - G7| on it is below its width-proportional share of the tolerance
    max(abs_tol, rel_tol*|value|).
    """
    transform = "none"
    g = f
    lo_lim, hi_lim = float(a), float(b)
    if math.isinf(hi_lim):
        if hi_lim < 0:
            raise DomainError("only +inf is supported as an infinite limit")
        shift = lo_lim

        def g(t, _f=f):
            s = 1.0 - t
            return _batch_eval(_f, shift + t / s) / (s * s)

        lo_lim, hi_lim = 0.0, 1.0
        transform = "r = a + t/(1-t)"
    if hi_lim == lo_lim:
        return QuadResult(0.0, 0.0, 0, transform)
    width = hi_lim - lo_lim

    pend_lo = np.array([lo_lim])
    pend_hi = np.array([hi_lim])
    done_val = 0.0
    done_comp = 0.0
    done_err = 0.0
    n_intervals = 0
    while True:
        half = 0.5 * (pend_hi - pend_lo)
        mid = 0.5 * (pend_hi + pend_lo)
        x = mid[:, None] + half[:, None] * _NODES[None, :]
        y = _batch_eval(g, x)
        if not np.all(np.isfinite(y)):
            raise ConvergenceError("non-finite integrand value encountered")
        kron = half * (y @ _KWEIGHTS)
        gauss = half * (y @ _GWEIGHTS)
        err = np.abs(kron - gauss)
        estimate = done_val + kron.sum()
        tol = max(abs_tol, rel_tol * abs(estimate))
        share = tol * (pend_hi - pend_lo) / width
        ok = err <= share
        # Neumaier-compensated accumulation of accepted panels
        for v in kron[ok]:
            t = done_val + v
            if abs(done_val) >= abs(v):
                done_comp += (done_val - t) + v
            else:
                done_comp += (v - t) + done_val
            done_val = t
        done_err += err[ok].sum()
        n_intervals += int(ok.sum())
        if ok.all():
            return QuadResult(done_val + done_comp, done_err, n_intervals, transform)
        bad_lo, bad_hi, bad_mid = pend_lo[~ok], pend_hi[~ok], mid[~ok]
        if n_intervals + 2 * bad_lo.size > max_intervals or np.any(bad_mid <= bad_lo) or np.any(bad_mid >= bad_hi):
            value = done_val + done_comp + kron[~ok].sum()
            raise ToleranceNotMet("adaptive_quad: interval budget exhausted",
                                  value, done_err + err[~ok].sum())
        pend_lo = np.concatenate([bad_lo, bad_mid])
        pend_hi = np.concatenate([bad_mid, bad_hi])


def invert_monotone(f: Callable[[float], float], target: float, lo: float, hi: float,
                    tol: float = 1e-12) -> float:
    """Solve f(r) = target for r in [lo, hi] where f is strictly monotone."""
    f_lo = float(f(lo)) - target
    f_hi = float(f(hi)) - target
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if np.sign(f_lo) == np.sign(f_hi):
        raise BracketError(f"target {target} not enclosed by f({lo}), f({hi})")
    root = optimize.brentq(lambda r: float(f(r)) - target, lo, hi,
                           xtol=1e-300, rtol=4 * _EPS, maxiter=500)
    resid = abs(float(f(root)) - target)
    if resid > tol * max(1.0, abs(target)):
        # brentq stops on bracket width; polish by a few secant steps
        a_, b_ = lo, hi
        for _ in range(200):
            m = 0.5 * (a_ + b_)
            fm = float(f(m)) - target
            if abs(fm) <= tol * max(1.0, abs(target)) or m in (a_, b_):
                root = m
                break
            if np.sign(fm) == np.sign(f_lo):
                a_ = m
            else:
                b_ = m
        resid = abs(float(f(root)) - target)
        if resid > tol * max(1.0, abs(target)):
            raise ConvergenceError(f"invert_monotone residual {resid:.3e} exceeds tolerance")
    return root
