"""Discrete-event simulator of swap-backed memory under interactive tab pressure."""

from .config import ScenarioConfig, load_config, preset
from .scenario import Machine, RunReport, compare, run_scenario
from .workload import ConfigError

__all__ = ["ScenarioConfig", "load_config", "preset", "Machine", "RunReport", "compare",
           "run_scenario", "ConfigError"]
