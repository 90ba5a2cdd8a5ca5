"""Suite orchestration: config, process lifecycle, scenarios, seed data."""

from .config import ConfigError, SuiteConfig, load_config
from .scenarios import SCENARIO_NAMES, ScenarioAssertionFailed, run_scenario
from .seeds import generate_seed_bundle, write_seed_file
from .suite import DependencyNotReady, PortInUse, Suite, launch_suite

__all__ = [
    "ConfigError",
    "DependencyNotReady",
    "PortInUse",
    "SCENARIO_NAMES",
    "ScenarioAssertionFailed",
    "Suite",
    "SuiteConfig",
    "generate_seed_bundle",
    "launch_suite",
    "load_config",
    "run_scenario",
    "write_seed_file",
]
