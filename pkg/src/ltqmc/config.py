"""Experiment configuration: flat ``section.key=value`` text files.

Precedence, lowest first: built-in defaults (the benchmark basket), the
config file, environment variables (``LTQMC_`` + key upper-cased with dots
turned into underscores, e.g. ``LTQMC_RUN_SEED``), command-line flags.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, fields
from pathlib import Path

ENV_PREFIX = "LTQMC_"


class ConfigError(ValueError):
    pass


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(",") if x.strip())


def _names(text: str) -> tuple[str, ...]:
    return tuple(x.strip().lower() for x in text.split(",") if x.strip())


# config key -> (attribute, parser)
KEYS = {
    "market.M": ("M", int),
    "market.N": ("N", int),
    "market.S0": ("S0", float),
    "market.r": ("r", float),
    "market.T": ("T", float),
    "market.sigma_low": ("sigma_low", float),
    "market.sigma_high": ("sigma_high", float),
    "market.correlations": ("correlations", _floats),
    "market.strikes": ("strikes", _floats),
    "run.methods": ("methods", _names),
    "run.generators": ("generators", _names),
    "run.n_per_batch": ("n_per_batch", int),
    "run.batches": ("batches", int),
    "run.seed": ("seed", int),
    "lt.k_star": ("k_star", int),
    "analysis.p_max": ("p_max", int),
    "analysis.level": ("level", float),
    "analysis.d_T_bound": ("d_T_bound", int),
    "analysis.timing_repeats": ("timing_repeats", int),
    "sampling.direction_file": ("direction_file", lambda s: s.strip() or None),
    "sampling.sobol_skip": ("sobol_skip", lambda s: int(s) if s.strip() else None),
    "output.dir": ("out_dir", str),
    "selftest.tolerance_scale": ("tolerance_scale", float),
}


@dataclass(frozen=True)
class ExperimentConfig:
    M: int = 10
    N: int = 250
    S0: float = 100.0
    r: float = 0.04
    T: float = 1.0
    sigma_low: float = 0.10
    sigma_high: float = 0.50
    correlations: tuple[float, ...] = (0.0, 0.4)
    strikes: tuple[float, ...] = (90.0, 100.0, 110.0)
    methods: tuple[str, ...] = ("cholesky", "pca", "lt1", "lt2")
    generators: tuple[str, ...] = ("pseudo", "lhs", "hybrid")
    n_per_batch: int = 8192
    batches: int = 10
    seed: int = 20080101
    k_star: int = 50
    p_max: int = 10
    level: float = 0.99
    d_T_bound: int = 2000
    timing_repeats: int = 3
    direction_file: str | None = None
    sobol_skip: int | None = None
    out_dir: str = "results"
    tolerance_scale: float = 1.0

    def __post_init__(self):
        from .analysis import METHODS
        from .sampling import KINDS
        if self.M < 1 or self.N < 1:
            raise ConfigError("market.M and market.N must be positive")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"unknown method {m!r}; choose from {METHODS}")
        for g in self.generators:
            if g not in KINDS:
                raise ConfigError(f"unknown generator {g!r}; choose from {KINDS}")
        if self.k_star < 1:   # capped at M*N where it is used
            raise ConfigError("lt.k_star must be at least 1")
        if not 0.0 < self.level < 1.0:
            raise ConfigError("analysis.level must lie in (0, 1)")
        if self.sobol_skip is not None and self.sobol_skip < 0:
            raise ConfigError("sampling.sobol_skip must be nonnegative")
        if self.n_per_batch < 2 or self.batches < 2:
            raise ConfigError("run.n_per_batch and run.batches must be at least 2")

    def market(self, rho: float, K: float | None = None):
        from .market import table1_market
        return table1_market(rho, self.strikes[0] if K is None else K, self.M, self.N,
                             self.S0, self.r, self.T, self.sigma_low, self.sigma_high)

    def correlation_label(self, rho: float) -> str:
        if rho == 0.0:
            return "uncorrelated"
        if sum(1 for c in self.correlations if c != 0.0) == 1:
            return "correlated"
        return f"rho={rho:g}"


def parse_text(text: str, source: str = "<config>") -> dict[str, str]:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        raw[key] = value
    return raw


def env_overrides(environ=None) -> dict[str, str]:
    environ = os.environ if environ is None else environ
    out = {}
    for key in KEYS:
        name = ENV_PREFIX + key.replace(".", "_").upper()
        if name in environ:
            out[key] = environ[name]
    return out


def build_config(path: str | Path | None = None, overrides: dict[str, str] | None = None,
                 environ=None) -> ExperimentConfig:
    raw = {}
    if path is not None:
        raw.update(parse_text(Path(path).read_text(), str(path)))
    raw.update(env_overrides(environ))
    raw.update(overrides or {})
    values = {}
    for key, text in raw.items():
        attr, parse = KEYS[key]
        try:
            values[attr] = parse(text)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {text!r}") from exc
    return ExperimentConfig(**values)


def dump(config: ExperimentConfig) -> str:
    """Config as ``key=value`` text that :func:`parse_text` reads back."""
    attrs = {f.name: getattr(config, f.name) for f in fields(config)}
    lines = []
    for key, (attr, _) in KEYS.items():
        value = attrs[attr]
        if isinstance(value, tuple):
            value = ",".join(f"{v:g}" if isinstance(v, float) else v for v in value)
        lines.append(f"{key}={'' if value is None else value}")
    return "\n".join(lines) + "\n"
