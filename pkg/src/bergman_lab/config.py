"""Run configuration for the batch driver, loaded from TOML."""
from __future__ import annotations

import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import BergmanLabError
from .testfam import TestFunction

DEFAULT_TEST_FUNCTIONS = (
    ((1, 0.05),),
    ((1, 0.1),),
    ((2, 0.1),),
    ((1, 0.05), (2, 0.05)),
    ((3, 0.12),),
    ((1, 0.02), (2, 0.03), (3, 0.05)),
)
DEFAULT_CAPS = ((0.0, 0.1), (0.0, 0.5), (0.5, 0.2), (1.0, 0.3), (2.0, 0.05))
DEFAULT_TOLERANCES = {
    "ode_residual": 1e-8,
    "monotonicity": 1e-6,
    "deficit": 1e-8,
    "mc_sigmas": 3.0,
    "bathtub": 1e-8,
    "psi": 1e-6,
    "wehrl": 1e-8,
    "norm_gap": 1e-8,
    "point_eval": 1e-8,
    "stability": 1e-6,
    "convex": 1e-6,
    "slope": 0.05,
    "rearrangement": 1e-6,
    "isometry": 1e-12,
    "jacobian": 1e-5,
}
_KEYS = {"n", "alpha", "p", "test_functions", "caps", "levels", "seed", "tolerances", "output_dir"}


class ConfigError(BergmanLabError, ValueError):
    """Malformed or inconsistent run configuration."""


@dataclass(frozen=True)
class RunConfig:
    """Parameters of one batch run; every default is echoed into report.json."""

    n: int = 3
    alpha: float = 1.0
    p: float = 2.0
    test_functions: tuple = DEFAULT_TEST_FUNCTIONS
    caps: tuple = DEFAULT_CAPS
    levels: int = 20
    seed: int = 0
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    output_dir: Path = Path(".")

    def __post_init__(self):
        tf = tuple(tuple((int(m), float(c)) for m, c in spec) for spec in self.test_functions)
        caps = tuple((float(a), float(s)) for a, s in self.caps)
        object.__setattr__(self, "test_functions", tf)
        object.__setattr__(self, "caps", caps)
        object.__setattr__(self, "output_dir", Path(self.output_dir))
        object.__setattr__(self, "tolerances", {**DEFAULT_TOLERANCES, **dict(self.tolerances)})
        if self.n < 2:
            raise ConfigError("n must be at least 2")
        if not (self.alpha > 0 and self.p > 0):
            raise ConfigError("alpha and p must be positive")
        if self.levels < 1:
            raise ConfigError("levels must be positive")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        for name, tol in self.tolerances.items():
            if not (isinstance(tol, (int, float)) and math.isfinite(tol) and tol > 0):
                raise ConfigError(f"tolerance {name!r} must be a positive number")
        for a, s in caps:
            if not (0.0 < s < 1.0 and a >= 0.0):
                raise ConfigError(f"cap ({a}, {s}) needs |x0| >= 0 and a measure fraction in (0, 1)")
        if self.n >= 3:
            for spec in tf:
                try:
                    TestFunction(self.n, self.p, self.alpha, spec)
                except BergmanLabError as exc:
                    raise ConfigError(f"test function {spec}: {exc}") from exc

    def functions(self, p: float | None = None, alpha: float | None = None) -> list[TestFunction]:
        p = self.p if p is None else p
        alpha = self.alpha if alpha is None else alpha
        return [TestFunction(self.n, p, alpha, spec) for spec in self.test_functions]

    def to_dict(self) -> dict:
        out = asdict(self)
        out["output_dir"] = str(self.output_dir)
        out["test_functions"] = [[list(t) for t in spec] for spec in self.test_functions]
        out["caps"] = [list(c) for c in self.caps]
        return out


def load_config(path: str | Path | None = None, **overrides) -> RunConfig:
    """Read a TOML file (optional) and apply keyword overrides that are not None."""
    data: dict = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"malformed TOML in {path}: {exc}") from exc
    unknown = set(data) - _KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    tol = data.get("tolerances", {})
    if not isinstance(tol, dict):
        raise ConfigError("[tolerances] must be a table")
    unknown_tol = set(tol) - set(DEFAULT_TOLERANCES)
    if unknown_tol:
        raise ConfigError(f"unknown tolerances: {sorted(unknown_tol)}")
    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return RunConfig(**data)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid config: {exc}") from exc
