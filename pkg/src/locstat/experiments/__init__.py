"""Scenario runners. Each takes an :class:`ExperimentConfig` and returns
``(report, trajectories)``; the report is JSON-ready and embeds the resolved
config."""

from .config import ConfigError, ExperimentConfig
from .indepset import TriangleFound, exp_indepset
from .oracle import exp_oracle
from .sbm import exp_sbm
from .spiked import exp_spiked

SCENARIO_RUNNERS = {
    "indepset": exp_indepset,
    "spiked": exp_spiked,
    "sbm": exp_sbm,
    "oracle": exp_oracle,
}

__all__ = ["ConfigError", "ExperimentConfig", "TriangleFound", "SCENARIO_RUNNERS",
           "exp_indepset", "exp_spiked", "exp_sbm", "exp_oracle"]
