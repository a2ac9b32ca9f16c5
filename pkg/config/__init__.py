"""
Config package
Environment settings, environment files and per-run configuration
"""

from config.settings import Settings, get_settings, reset_settings
from config.env_loader import EnvironmentLoader, load_environment_config
from config.run_config import (
    RunConfig, TargetingConfig, StudyConfig, MonotonicityConfig, load_run_config, resolve_run_config,
)

__all__ = [
    "Settings", "get_settings", "reset_settings", "EnvironmentLoader", "load_environment_config",
    "RunConfig", "TargetingConfig", "StudyConfig", "MonotonicityConfig", "load_run_config", "resolve_run_config",
]
