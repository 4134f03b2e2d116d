"""Run configuration: flat ``key = value`` files, CLI overrides, run manifest.

Unknown keys are rejected outright so typos cannot silently fall back to
defaults. Every command echoes its resolved parameters to
``run_manifest.txt``, which doubles as the reproducibility record for
parameters the problem itself does not pin down.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Mapping

from .clustering import LINKAGES
from .errors import ConfigError, InputIOError
from .solvers import SolverConfig


@dataclass
class RunConfig:
    features: str = ""
    labels: str = ""
    output_dir: str = "out"
    min_images: int = 1
    max_size: int | None = None
    cutoff: float = 0.25
    linkage: str = "average"
    coverage: float = 0.9
    lambda1: float = 0.01
    lambda2: float = 0.1
    rho: float = 0.01
    tol: float = 1e-6
    max_iter: int = 2000
    normalize: bool = True
    step_rule: str = "fixed"
    b: int = 5
    epsilon_group: float = 1e-8
    all_theme_members: bool = False
    test_fraction: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.min_images < 1:
            raise ConfigError(f"min_images must be >= 1, got {self.min_images}")
        if self.max_size is not None and self.max_size < 1:
            raise ConfigError(f"max_size must be >= 1, got {self.max_size}")
        if not 0.0 < self.cutoff <= 1.0:
            raise ConfigError(f"cutoff must lie in (0, 1], got {self.cutoff}")
        if self.linkage not in LINKAGES:
            raise ConfigError(f"linkage must be one of {LINKAGES}, got {self.linkage!r}")
        if not 0.0 < self.coverage <= 1.0:
            raise ConfigError(f"coverage must lie in (0, 1], got {self.coverage}")
        if self.lambda1 < 0 or self.lambda2 < 0 or self.rho < 0:
            raise ConfigError("lambda1, lambda2, rho must be nonnegative")
        if self.tol <= 0:
            raise ConfigError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ConfigError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.step_rule not in ("fixed", "backtracking"):
            raise ConfigError(f"step_rule must be fixed or backtracking, got {self.step_rule!r}")
        if self.b < 1:
            raise ConfigError(f"b must be >= 1, got {self.b}")
        if self.epsilon_group <= 0:
            raise ConfigError(f"epsilon_group must be positive, got {self.epsilon_group}")
        if not 0.0 < self.test_fraction < 1.0:
            raise ConfigError(f"test_fraction must lie in (0, 1), got {self.test_fraction}")

    def solver_config(self) -> SolverConfig:
        return SolverConfig(
            lambda1=self.lambda1,
            lambda2=self.lambda2,
            rho=self.rho,
            max_iter=self.max_iter,
            tol=self.tol,
            step_rule=self.step_rule,
            normalize=self.normalize,
        )

    def manifest_text(self) -> str:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            lines.append(f"{f.name} = {_format_value(value)}")
        return "\n".join(lines) + "\n"


_BOOL_FIELDS = {"normalize", "all_theme_members"}
_INT_FIELDS = {"min_images", "max_size", "max_iter", "b", "seed"}
_FLOAT_FIELDS = {"cutoff", "coverage", "lambda1", "lambda2", "rho", "tol", "epsilon_group", "test_fraction"}
_FIELD_NAMES = {f.name for f in fields(RunConfig)}


def _format_value(value: Any) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _coerce(key: str, raw: str) -> Any:
    raw = raw.strip()
    try:
        if key == "max_size":
            return None if raw.lower() in ("", "none") else int(raw)
        if key in _BOOL_FIELDS:
            if raw.lower() not in ("true", "false"):
                raise ValueError(f"expected true/false, got {raw!r}")
            return raw.lower() == "true"
        if key in _INT_FIELDS:
            return int(raw)
        if key in _FLOAT_FIELDS:
            return float(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {exc}") from exc
    return raw


def parse_config_file(path: str | Path) -> dict[str, Any]:
    """Read a flat ``key = value`` file; ``#`` lines are comments."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputIOError(f"cannot read config {path}: {exc}") from exc
    values: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _FIELD_NAMES:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        values[key] = _coerce(key, value)
    return values


def load_config(path: str | Path | None, overrides: Mapping[str, Any] | None = None) -> RunConfig:
    """Resolve a RunConfig from an optional file plus CLI overrides."""
    values: dict[str, Any] = {}
    if path is not None:
        values.update(parse_config_file(path))
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in _FIELD_NAMES:
            raise ConfigError(f"unknown config key {key!r}")
        values[key] = _coerce(key, value) if isinstance(value, str) else value
    try:
        return RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
