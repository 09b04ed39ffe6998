"""Experiment configuration.

A config is a flat JSON object. Its keys are the CLI flag names with dashes
replaced by underscores, so a report's ``config`` block can be fed back in
with ``--config`` to reproduce the run.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

SCENARIOS = ("indepset", "spiked", "sbm", "oracle")
MODES = ("uniform-time", "end-state")
FORMATS = ("csv", "json")
DEFAULT_BETA_GRID = [round(0.1 * k, 1) for k in range(1, 11)]

# pilot-frozen acceptance thresholds; the analytic constants are floors only
DEFAULT_THRESHOLDS = {
    "indepset": {"bound_fraction": 0.2, "greedy_multiple": 1.5, "exact_rel_err": 0.02},
    "spiked": {"planted_min": 0.3, "control_max": 0.1, "slope": -0.5, "slope_tol": 0.15},
    "sbm": {"planted_min": 0.15, "control_max": 0.05},
    "oracle": {},
}

SCENARIO_DEFAULTS = {
    "indepset": {"n": 2000, "d": 32, "steps": 50_000_000, "replicas": 8},
    "spiked": {"n": 1000, "lam": 10.0, "kappa": 0.25, "steps": 20_000_000, "replicas": 1},
    "sbm": {"n": 2000, "d": 40, "lam": 6.0, "steps": 20_000_000, "replicas": 1},
    "oracle": {"instances": 100},
}

# JSON key -> attribute; "lambda" is a Python keyword
_KEY_TO_ATTR = {"lambda": "lam"}
_ATTR_TO_KEY = {v: k for k, v in _KEY_TO_ATTR.items()}


class ConfigError(ValueError):
    """Invalid or inconsistent configuration (exit code 2)."""


@dataclass
class ExperimentConfig:
    scenario: str
    n: int | None = None
    d: float | None = None
    lam: float | None = None
    beta: list | None = None
    kappa: float | None = None
    steps: int | None = None
    time: float | None = None
    replicas: int = 1
    seed: int = 0
    out: str | None = None
    format: str = "json"
    graph: str | None = None
    mode: str = "uniform-time"
    stride: int | None = None
    workers: int = 1
    burn_in: float = 0.0
    n_scan: list = field(default_factory=list)
    instances: int | None = None
    thresholds: dict = field(default_factory=dict)

    def resolved(self) -> "ExperimentConfig":
        """Fill scenario defaults and validate."""
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}")
        cfg = ExperimentConfig(**asdict(self))
        for k, v in SCENARIO_DEFAULTS[cfg.scenario].items():
            if getattr(cfg, k) is None:
                setattr(cfg, k, v)
        if cfg.scenario == "sbm" and cfg.beta is None:
            cfg.beta = list(DEFAULT_BETA_GRID)
        if cfg.beta is not None and not isinstance(cfg.beta, list):
            cfg.beta = [float(cfg.beta)]
        if cfg.time is not None:
            cfg.steps = None
        if cfg.scenario != "oracle" and cfg.stride is None:
            cfg.stride = max(1, (cfg.n or 10) // 10)
        cfg.thresholds = {**DEFAULT_THRESHOLDS[cfg.scenario], **(cfg.thresholds or {})}
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}")
        if self.replicas < 1 or self.workers < 1:
            raise ConfigError("replicas and workers must be >= 1")
        if not 0 <= self.burn_in < 1:
            raise ConfigError("burn_in must lie in [0, 1)")
        if self.steps is not None and self.steps < 0:
            raise ConfigError("steps must be nonnegative")
        if self.time is not None and self.time < 0:
            raise ConfigError("time must be nonnegative")
        if self.stride is not None and self.stride < 1:
            raise ConfigError("stride must be >= 1")
        if self.scenario == "indepset" and self.graph is None:
            if self.n % 2 or not 1 <= self.d <= self.n // 2 or int(self.d) != self.d:
                raise ConfigError("bipartite regular generator needs even n and integer 1 <= d <= n/2")
        if self.scenario == "spiked":
            if not 0 < self.kappa < 0.5:
                raise ConfigError("spiked scenario needs 0 < kappa < 1/2")
            if self.lam < 0:
                raise ConfigError("lambda must be nonnegative")
        if self.scenario == "sbm":
            if self.lam * self.lam > self.d + 1e-12:
                raise ConfigError("sbm needs lambda^2 <= d")
            if not 0 < self.d < self.n:
                raise ConfigError("sbm needs 0 < d < n")
            if not self.beta or any(not math.isfinite(b) or b < 0 for b in self.beta):
                raise ConfigError("beta grid must be nonempty and nonnegative")
        if self.scenario == "oracle" and self.instances < 1:
            raise ConfigError("instances must be >= 1")

    def to_dict(self) -> dict:
        return {_ATTR_TO_KEY.get(k, k): v for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        kwargs = {}
        for k, v in obj.items():
            attr = _KEY_TO_ATTR.get(k, k.replace("-", "_"))
            if attr not in known:
                raise ConfigError(f"unknown config key {k!r}")
            kwargs[attr] = v
        if "scenario" not in kwargs:
            raise ConfigError("config needs a scenario")
        return cls(**kwargs)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            obj = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if isinstance(obj.get("config"), dict):
            obj = obj["config"]  # accept a report as input
        return cls.from_dict(obj)
