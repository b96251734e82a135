"""Experiment configuration: schema, validation, TOML/JSON loading."""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .beliefs import distribution_from_config
from .errors import ConfigError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = ["WealthSpec", "ExperimentConfig", "load_config", "load_sweep",
           "config_digest", "SCHEMA_VERSION"]

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class WealthSpec:
    """Bettor wealth law: constant, uniform on (0, 2 mean), or lognormal
    with the given mean and log-space sigma."""

    kind: str = "constant"
    mean: float = 1.0
    sigma: float = 0.5  # lognormal only

    def __post_init__(self):
        if self.kind not in ("constant", "uniform", "lognormal"):
            raise ConfigError("wealth.kind",
                              f"unknown kind {self.kind!r}; expected "
                              "constant, uniform, or lognormal")
        if self.mean <= 0.0:
            raise ConfigError("wealth.mean", f"must be > 0, got {self.mean}")
        if self.kind == "lognormal" and self.sigma <= 0.0:
            raise ConfigError("wealth.sigma", f"must be > 0, got {self.sigma}")

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "constant":
            return np.full(size, self.mean)
        if self.kind == "uniform":
            return rng.uniform(0.0, 2.0 * self.mean, size)
        mu = np.log(self.mean) - 0.5 * self.sigma ** 2
        return rng.lognormal(mu, self.sigma, size)


_POLICY_KINDS = ("sa", "ftl", "risk_balance", "lmsr", "fixed")
_BENCHMARK_MODES = ("global", "fair_global", "custom")


@dataclass(frozen=True)
class ExperimentConfig:
    distribution: dict
    horizon: int
    seeds: tuple = (0,)
    g: float = 0.5
    wealth: WealthSpec = field(default_factory=WealthSpec)
    policy: dict = field(default_factory=lambda: {"kind": "fixed", "params": {}})
    benchmark: dict = field(default_factory=lambda: {"mode": "global"})
    wealth_estimate: str = "oracle"  # "oracle" E[w] or "disclosed" per-bettor
    trajectory_cadence: str = "auto"  # every step <= 1e3, then every 1e3; or "full"
    resolve: float | None = None  # true event probability for cash settlement

    def __post_init__(self):
        try:
            distribution_from_config(self.distribution)
        except (ValueError, TypeError) as exc:
            raise ConfigError("distribution", str(exc)) from exc
        if self.horizon < 1:
            raise ConfigError("horizon", f"must be >= 1, got {self.horizon}")
        if not self.seeds:
            raise ConfigError("seeds", "must be nonempty")
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if not 0.0 < self.g < 1.0:
            raise ConfigError("g", f"must lie in (0, 1), got {self.g}")
        kind = self.policy.get("kind")
        if kind not in _POLICY_KINDS:
            raise ConfigError("policy.kind",
                              f"unknown kind {kind!r}; expected one of "
                              f"{_POLICY_KINDS}")
        mode = self.benchmark.get("mode", "global")
        if mode not in _BENCHMARK_MODES:
            raise ConfigError("benchmark.mode",
                              f"unknown mode {mode!r}; expected one of "
                              f"{_BENCHMARK_MODES}")
        if mode == "custom":
            if "a" not in self.benchmark or "b" not in self.benchmark:
                raise ConfigError("benchmark",
                                  "custom mode needs explicit a and b")
        if self.wealth_estimate not in ("oracle", "disclosed"):
            raise ConfigError("wealth_estimate",
                              f"expected 'oracle' or 'disclosed', got "
                              f"{self.wealth_estimate!r}")
        if self.trajectory_cadence not in ("auto", "full"):
            raise ConfigError("trajectory_cadence",
                              f"expected 'auto' or 'full', got "
                              f"{self.trajectory_cadence!r}")
        if self.resolve is not None and not 0.0 <= self.resolve <= 1.0:
            raise ConfigError("resolve",
                              f"must lie in [0, 1], got {self.resolve}")

    def make_distribution(self):
        return distribution_from_config(self.distribution)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["seeds"] = list(self.seeds)
        return d


def config_digest(cfg: ExperimentConfig) -> str:
    """Stable short hash identifying a config (seed list excluded)."""
    d = cfg.as_dict()
    d.pop("seeds")
    blob = json.dumps(d, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def _from_dict(raw: dict) -> ExperimentConfig:
    raw = dict(raw)
    raw.pop("schema_version", None)
    wealth = raw.pop("wealth", None)
    kwargs = {}
    for key in ("distribution", "horizon", "seeds", "g", "policy",
                "benchmark", "wealth_estimate", "trajectory_cadence",
                "resolve"):
        if key in raw:
            kwargs[key] = raw.pop(key)
    if raw:
        raise ConfigError(sorted(raw)[0], "unknown config field")
    if "distribution" not in kwargs:
        raise ConfigError("distribution", "missing required field")
    if "horizon" not in kwargs:
        raise ConfigError("horizon", "missing required field")
    if wealth is not None:
        kwargs["wealth"] = WealthSpec(**wealth)
    if "seeds" in kwargs:
        kwargs["seeds"] = tuple(kwargs["seeds"])
    return ExperimentConfig(**kwargs)


def _read_raw(path) -> dict:
    path = Path(path)
    data = path.read_bytes()
    if path.suffix.lower() == ".json":
        return json.loads(data)
    return tomllib.loads(data.decode())


def load_config(path) -> ExperimentConfig:
    """Load a single-experiment TOML or JSON config file."""
    raw = _read_raw(path)
    if "experiments" in raw:
        raise ConfigError("experiments",
                          "this file is a sweep; use load_sweep")
    return _from_dict(raw)


def load_sweep(path) -> list[ExperimentConfig]:
    """Load a sweep file: top-level defaults plus an `experiments` array of
    per-run overrides (shallow merge, experiment entry wins)."""
    raw = _read_raw(path)
    entries = raw.pop("experiments", None)
    if entries is None:
        return [_from_dict(raw)]
    cfgs = []
    for entry in entries:
        merged = {**raw, **entry}
        cfgs.append(_from_dict(merged))
    return cfgs
