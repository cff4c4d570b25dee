"""Batch driver: weight tables, verification suites and the stability exponent fit.

Exit codes: 0 all checks pass, 1 an inequality fails, 2 numerical
non-convergence, 3 I/O or configuration error (nothing is written).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from .analysis import (RadialDensity, layer_cake_pair, monotonicity_check, psi_value,
                       v_star_ode_residual)
from .config import ConfigError, RunConfig, load_config
from .errors import BergmanLabError, ConvergenceError
from .functionals import (Cap, bathtub_gap, convex_stability_gap, deficit_distance_family,
                          faber_krahn_deficit, norm_monotonicity_gap, phi_fit, point_eval_gap,
                          stability_report, standard_convex_set, standard_piecewise,
                          translate_identity, translated_integral, wehrl_extremal, wehrl_value)
from .geometry import (ExtendedPoint, SpherePoint, jacobian_residual, phi_x0, sphere_distance,
                       sphere_isometry, sphere_volume, stereo_lift)
from .testfam import TestFunction
from .weight import GRID, normalization_c, radial_profile, sandwich_bounds, weight_many

EXIT_OK, EXIT_FAIL, EXIT_NONCONVERGED, EXIT_IO = 0, 1, 2, 3
SUITES = ("monotonicity", "faber-krahn", "wehrl", "stability", "geometry", "all")
NORM_PAIRS = ((2.0, 1.0, 4.0, 2.0), (1.0, 1.0, 3.0, 3.0))
POINT_GRID = tuple(float(v) for v in np.linspace(0.0, 3.0, 8))


def thread_count() -> int:
    """Worker count from BERGMAN_LAB_THREADS (default 1)."""
    raw = os.environ.get("BERGMAN_LAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _pmap(fn: Callable, items) -> list:
    items = list(items)
    workers = min(thread_count(), max(1, len(items)))
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# output helpers


def _fmt(v) -> str:
    return repr(float(v))


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=float) + "\n"


def _gnuplot(csv_name: str, xcol: int, ycols, title: str, logscale: str = "") -> str:
    lines = ["set datafile separator ','", f"set title '{title}'", "set key autotitle columnhead"]
    if logscale:
        lines.append(f"set logscale {logscale}")
    plots = ", ".join(f"'{csv_name}' using {xcol}:{c} with lines" for c in ycols)
    lines.append(f"plot {plots}")
    return "\n".join(lines) + "\n"


def write_outputs(out_dir: Path, files: dict[str, str]) -> None:
    """Write every file or none: temporaries are renamed only after all writes succeed."""
    if not out_dir.is_dir():
        raise ConfigError(f"output directory {out_dir} does not exist")
    temps = []
    try:
        for name, text in files.items():
            tmp = out_dir / f".{name}.tmp"
            tmp.write_text(text)
            temps.append((tmp, out_dir / name))
        for tmp, final in temps:
            os.replace(tmp, final)
    except OSError as exc:
        for tmp, _ in temps:
            tmp.unlink(missing_ok=True)
        raise ConfigError(f"cannot write outputs to {out_dir}: {exc}") from exc


# ---------------------------------------------------------------------------
# weight table


def weight_rows(n: int) -> list[tuple]:
    """(r, k, h, W, ode_residual, lower_bound, upper_bound) on the standard grid, c = -1."""
    prof = radial_profile(n, -1.0)
    r = GRID
    k = prof.derivative(r)
    h = prof.value(r)
    W = np.exp(h)
    resid = prof.laplacian(r) + 1.0
    if n > 2:
        lower, upper = sandwich_bounds(n, -1.0, r)
    else:
        # both bounds collapse to the exact weight (1 + r^2)^(-1) when n = 2
        lower = upper = np.exp(-np.log1p(r * r))
    return list(zip(r, k, h, W, resid, lower, upper))


def cmd_weight(cfg: RunConfig) -> int:
    rows = weight_rows(cfg.n)
    header = ["r", "k", "h", "W", "ode_residual", "lower_bound", "upper_bound"]
    files = {
        "weight.csv": _csv_text(header, rows),
        "weight.gp": _gnuplot("weight.csv", 1, [4, 6, 7], f"W_{cfg.n}", logscale="x"),
    }
    write_outputs(cfg.output_dir, files)
    tol = cfg.tolerances["ode_residual"]
    if max(abs(row[4]) for row in rows) > tol:
        return EXIT_NONCONVERGED
    slack = 1e-12
    if any(not (lo * (1 - slack) <= w <= up * (1 + slack)) for _, _, _, w, _, lo, up in rows):
        return EXIT_FAIL
    return EXIT_OK


# ---------------------------------------------------------------------------
# verification suites


@dataclass
class CheckResult:
    """Outcome of one named check; ``worst_margin`` >= 0 means the inequality holds."""

    name: str
    passed: bool
    worst_margin: float
    count: int
    runtime_s: float = 0.0
    detail: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "worst_margin": self.worst_margin,
                "count": self.count, "runtime_s": round(self.runtime_s, 6), "detail": self.detail}


def _margin_check(name: str, margins, **detail) -> CheckResult:
    m = np.asarray(margins, dtype=float).ravel()
    worst = float(np.min(m)) if m.size else math.inf
    return CheckResult(name, bool(m.size == 0 or (np.all(np.isfinite(m)) and worst >= 0.0)), worst, int(m.size),
                       detail=detail)


def _levels(T: float, count: int) -> np.ndarray:
    return np.geomspace(1e-3 * T, 0.99 * T, count)


def _needs_n3(cfg: RunConfig, name: str) -> CheckResult | None:
    if cfg.n < 3:
        return CheckResult(name, True, math.inf, 0, detail={"skipped": "test functions need n >= 3"})
    return None


def check_monotonicity(cfg: RunConfig) -> list[CheckResult]:
    out = []
    one = RadialDensity.weight(cfg.n, cfg.alpha)
    resid, _ = monotonicity_check(one, _levels(1.0, cfg.levels))
    tol = cfg.tolerances["monotonicity"]
    out.append(_margin_check("monotonicity_equality", tol - np.abs(resid), max_abs_residual=float(np.max(np.abs(resid)))))
    skip = _needs_n3(cfg, "monotonicity_test_functions")
    if skip:
        return out + [skip]

    def one_fn(f):
        dens = RadialDensity.of(f)
        r, t = monotonicity_check(dens, _levels(dens.max_value, cfg.levels))
        return (t - 1e-6 + tol) - r

    out.append(_margin_check("monotonicity_test_functions", _pmap(one_fn, cfg.functions())))
    return out


def check_rearrangement(cfg: RunConfig) -> list[CheckResult]:
    tol = cfg.tolerances["rearrangement"]
    total = sphere_volume(cfg.n)
    ode = v_star_ode_residual(cfg.n, cfg.alpha, np.linspace(0.05, 0.95, 10) * total)
    out = [_margin_check("v_star_equality_ode", tol - np.abs(ode))]
    if cfg.n < 3:
        return out

    def pair(f):
        margins = []
        for G in (lambda t: t, lambda t: t * t):
            a, b = layer_cake_pair(f, G)
            margins.append(tol * max(1.0, abs(a)) - abs(a - b))
        return margins

    out.append(_margin_check("equimeasurability", _pmap(pair, cfg.functions())))
    return out


def check_faber_krahn(cfg: RunConfig) -> list[CheckResult]:
    n, alpha = cfg.n, cfg.alpha
    out = []
    rng = np.random.default_rng(cfg.seed)
    sig = cfg.tolerances["mc_sigmas"]
    mc = []
    for a, frac in cfg.caps:
        direction = rng.standard_normal(n)
        x0 = ExtendedPoint.finite(a * direction / np.linalg.norm(direction))
        exact, est = translate_identity(n, alpha, x0, frac * sphere_volume(n), samples=100_000,
                                        seed=int(rng.integers(2 ** 63)))
        mc.append(sig * est.stderr - abs(est.value - exact))
    out.append(_margin_check("translate_identity_mc", mc))
    skip = _needs_n3(cfg, "faber_krahn_deficit")
    if skip:
        return out + [skip]
    fns = cfg.functions()
    caps = [Cap.at(n, a, frac) for a, frac in cfg.caps]
    items = [(f, c) for f in fns for c in caps]
    tol = cfg.tolerances["deficit"]
    out.append(_margin_check("faber_krahn_deficit", _pmap(lambda fc: faber_krahn_deficit(*fc) + tol, items)))
    tol_b = cfg.tolerances["bathtub"]
    out.append(_margin_check("bathtub", _pmap(lambda fc: bathtub_gap(*fc) + tol_b, items)))
    tol_p = cfg.tolerances["psi"]

    def psi(f):
        dens = RadialDensity.of(f)
        return [tol_p - psi_value(dens, t) for t in _levels(dens.max_value, cfg.levels)]

    out.append(_margin_check("psi_nonpositive", _pmap(psi, fns)))
    return out


def check_wehrl(cfg: RunConfig) -> list[CheckResult]:
    skip = _needs_n3(cfg, "wehrl")
    if skip:
        return [skip]
    n, alpha = cfg.n, cfg.alpha
    out = []
    Gs = standard_convex_set()
    ext = {G.label: wehrl_extremal(n, alpha, G) for G in Gs}
    tol = cfg.tolerances["wehrl"]
    items = [(f, G) for f in cfg.functions() for G in Gs]
    out.append(_margin_check("wehrl_maximum", _pmap(lambda fg: ext[fg[1].label] + tol - wehrl_value(*fg), items)))
    tol_n = cfg.tolerances["norm_gap"]
    norm_items = [(TestFunction(n, p, a, spec), b, q) for p, a, q, b in NORM_PAIRS for spec in cfg.test_functions]
    out.append(_margin_check("norm_monotonicity", _pmap(lambda it: norm_monotonicity_gap(*it) + tol_n, norm_items)))
    tol_pe = cfg.tolerances["point_eval"]

    def pe(f):
        pts = [ExtendedPoint.finite([r] + [0.0] * (n - 1)) for r in POINT_GRID]
        return [point_eval_gap(f, x) + tol_pe for x in pts] + [point_eval_gap(f, ExtendedPoint.infinity(n)) + tol_pe]

    out.append(_margin_check("point_evaluation", _pmap(pe, cfg.functions())))
    tol_c = cfg.tolerances["convex"]
    conv_items = [(f, G) for f in [TestFunction(n, cfg.p, alpha)] + cfg.functions()
                  for G in (standard_convex_set()[1], standard_piecewise())]

    def conv(fg):
        lhs, rhs = convex_stability_gap(*fg)
        return rhs + tol_c - lhs

    out.append(_margin_check("convex_stability", _pmap(conv, conv_items)))
    return out


def check_stability(cfg: RunConfig) -> list[CheckResult]:
    n, alpha = cfg.n, cfg.alpha
    out = []
    fit = phi_fit(n, alpha)
    target = 0.5 * n + 1.0
    out.append(_margin_check("phi_exponent", [cfg.tolerances["slope"] - abs(fit.slope - target)],
                             slope=fit.slope, target=target, r_squared=fit.r_squared))
    if cfg.n < 3 or cfg.p != 2:
        out.append(CheckResult("stability_chain", True, math.inf, 0,
                               detail={"skipped": "the chain is stated for p = 2 and n >= 3"}))
        return out
    tol = cfg.tolerances["stability"]
    total = sphere_volume(n)
    items = [(f, frac * total) for f in [TestFunction(n, 2.0, alpha)] + cfg.functions()
             for frac in sorted({frac for _, frac in cfg.caps})]

    def chain(it):
        rep = stability_report(*it)
        return [v + tol for v in rep.margins().values()]

    out.append(_margin_check("stability_chain", _pmap(chain, items)))
    fam = deficit_distance_family(n, [0.1, 0.05, 0.02, 0.01, 0.005], alpha=alpha)
    ratios = [p.ratio for p in fam]
    # ratios must be finite and non-increasing as the coefficient shrinks
    steps = [ratios[i] - ratios[i + 1] for i in range(len(ratios) - 1)]
    ok = all(math.isfinite(r) for r in ratios)
    out.append(_margin_check("deficit_distance_family", steps if ok else [-math.inf], ratios=ratios))
    return out


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def check_geometry(cfg: RunConfig) -> list[CheckResult]:
    n = cfg.n
    rng = np.random.default_rng(cfg.seed)
    out = []
    jac = []
    for _ in range(50):
        x0 = ExtendedPoint.finite(rng.standard_normal(n))
        x = ExtendedPoint.finite(rng.standard_normal(n))
        jac.append(cfg.tolerances["jacobian"] - abs(jacobian_residual(x0, x)))
    out.append(_margin_check("jacobian", jac))
    tol = cfg.tolerances["isometry"]
    iso = []
    for _ in range(20):
        xi = SpherePoint(_unit(rng.standard_normal(n + 1)))
        A = sphere_isometry(xi).entries
        iso.append(tol - np.max(np.abs(A @ A.T - np.eye(n + 1))))
        iso.append(tol - np.max(np.abs(A - A.T)))
        e = np.zeros(n + 1)
        e[-1] = 1.0
        iso.append(tol - np.max(np.abs(A @ e - xi.xi)))
        p, q = _unit(rng.standard_normal(n + 1)), _unit(rng.standard_normal(n + 1))
        iso.append(tol - abs(float((sphere_distance(A @ p, A @ q) - sphere_distance(p, q))[0])))
        x0 = ExtendedPoint.finite(rng.standard_normal(n))
        y = ExtendedPoint.finite(rng.standard_normal(n))
        back = phi_x0(x0, phi_x0(x0, y))
        iso.append(1e-9 * max(1.0, y.norm) - float(np.max(np.abs(back.array - y.array))))
        img = stereo_lift(phi_x0(x0, ExtendedPoint.origin(n))).xi
        iso.append(1e-9 - float(np.max(np.abs(img - stereo_lift(x0).xi))))
    out.append(_margin_check("isometry_invariants", iso))
    c = normalization_c(n, cfg.alpha)
    inv = [1e-9 * c - abs(translated_integral(n, lambda r: weight_many(n, r, cfg.alpha), a) - c)
           for a in (0.25, 1.0, 3.0)]
    out.append(_margin_check("measure_invariance", inv))
    return out


_SUITE_CHECKS = {
    "monotonicity": (check_monotonicity, check_rearrangement),
    "faber-krahn": (check_faber_krahn,),
    "wehrl": (check_wehrl,),
    "stability": (check_stability,),
    "geometry": (check_geometry,),
}


def run_suite(cfg: RunConfig, suite: str) -> tuple[int, dict]:
    """Run a suite; returns (exit code, report dictionary)."""
    if suite not in SUITES:
        raise ConfigError(f"unknown suite {suite!r}")
    names = [s for s in SUITES[:-1]] if suite == "all" else [suite]
    results: list[CheckResult] = []
    code = EXIT_OK
    error = None
    for name in names:
        for fn in _SUITE_CHECKS[name]:
            start = time.perf_counter()
            try:
                batch = fn(cfg)
            except ConvergenceError as exc:
                code, error = EXIT_NONCONVERGED, f"{name}: {exc}"
                batch = [CheckResult(fn.__name__, False, -math.inf, 0, detail={"error": str(exc)})]
            elapsed = time.perf_counter() - start
            for r in batch:
                r.runtime_s = elapsed / len(batch)
            results.extend(batch)
    if code == EXIT_OK and not all(r.passed for r in results):
        code = EXIT_FAIL
    report = {
        "version": __version__,
        "suite": suite,
        "config": cfg.to_dict(),
        "passed": code == EXIT_OK,
        "exit_code": code,
        "error": error,
        "checks": [r.as_dict() for r in results],
    }
    return code, report


def cmd_verify(cfg: RunConfig, suite: str) -> int:
    code, report = run_suite(cfg, suite)
    write_outputs(cfg.output_dir, {"report.json": _json_text(report)})
    for chk in report["checks"]:
        status = "PASS" if chk["passed"] else "FAIL"
        print(f"{status} {chk['name']} worst_margin={chk['worst_margin']:.3e} n={chk['count']}")
    return code


# ---------------------------------------------------------------------------
# stability exponent fit


def cmd_stability_fit(cfg: RunConfig) -> int:
    fit = phi_fit(cfg.n, cfg.alpha)
    target = 0.5 * cfg.n + 1.0
    tol = cfg.tolerances["slope"]
    passed = abs(fit.slope - target) <= tol
    rows = zip(fit.T, fit.phi, fit.log1mT, fit.logphi)
    summary = {"n": cfg.n, "alpha": cfg.alpha, "slope": fit.slope, "intercept": fit.intercept,
               "r_squared": fit.r_squared, "target": target, "tolerance": tol, "passed": passed}
    files = {
        "phi_fit.csv": _csv_text(["T", "phi", "log1mT", "logphi"], rows),
        "fit.json": _json_text(summary),
        "phi_fit.gp": _gnuplot("phi_fit.csv", 3, [4], f"log phi vs log(1-T), n={cfg.n}"),
    }
    write_outputs(cfg.output_dir, files)
    print(f"slope={fit.slope:.6f} target={target} r2={fit.r_squared:.8f}")
    return EXIT_OK if passed else EXIT_FAIL


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=argparse.SUPPRESS, help="TOML run configuration")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="RNG seed (u64)")
    common.add_argument("--out", type=Path, default=argparse.SUPPRESS, help="existing output directory")
    parser = argparse.ArgumentParser(prog="bergman-lab", parents=[common],
                                     description="Verification driver for spherical Bergman-space inequalities.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("weight", parents=[common], help="tabulate the weight profile")
    verify = sub.add_parser("verify", parents=[common], help="run an inequality suite")
    verify.add_argument("suite", choices=SUITES)
    sub.add_parser("stability-fit", parents=[common], help="fit the tail exponent of phi(T)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(getattr(args, "config", None), seed=getattr(args, "seed", None),
                          output_dir=getattr(args, "out", None))
        if args.command == "weight":
            return cmd_weight(cfg)
        if args.command == "verify":
            return cmd_verify(cfg, args.suite)
        return cmd_stability_fit(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ConvergenceError as exc:
        print(f"error: numerical non-convergence: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except BergmanLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
