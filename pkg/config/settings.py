"""
Environment Configuration Management
Centralized settings for environment variables that shape every run
"""
import os
from dataclasses import dataclass
from typing import Optional, Dict, Any

from errors import ConfigError

VALID_LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


@dataclass
class Settings:
    """Centralized application settings"""

    # Environment
    environment: str = "development"

    # Run defaults
    output_dir: str = "runouts"
    config_dir: str = "config"
    rng_seed: Optional[int] = None
    threads: int = 1
    mc_draws: int = 10000

    # Logging
    log_level: str = "INFO"
    log_format: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

    def __post_init__(self):
        """Validate settings after initialization"""
        self._set_derived_settings()
        self._validate()

    def _validate(self):
        if self.threads < 1:
            raise ConfigError(f"THREADS must be a positive integer, got {self.threads}")
        if self.mc_draws < 100:
            raise ConfigError(f"MC_DRAWS must be at least 100, got {self.mc_draws}")
        if self.log_level not in VALID_LOG_LEVELS:
            raise ConfigError(f"LOG_LEVEL must be one of {VALID_LOG_LEVELS}, got {self.log_level}")

    def _set_derived_settings(self):
        """Set derived settings based on environment"""
        self.log_level = self.log_level.upper()
        if self.environment == "production":
            self.log_level = "WARNING"
        elif self.environment == "debug":
            self.log_level = "DEBUG"

    @classmethod
    def from_env(cls) -> "Settings":
        """Create settings from environment variables"""
        try:
            return cls(
                environment=os.getenv("ENVIRONMENT", "development"),
                output_dir=os.getenv("OUTPUT_DIR", "runouts"),
                config_dir=os.getenv("CONFIG_DIR", "config"),
                rng_seed=int(os.getenv("RNG_SEED")) if os.getenv("RNG_SEED") else None,
                threads=int(os.getenv("THREADS", "1")),
                mc_draws=int(os.getenv("MC_DRAWS", "10000")),
                log_level=os.getenv("LOG_LEVEL", "INFO"),
                log_format=os.getenv("LOG_FORMAT", "%(asctime)s - %(name)s - %(levelname)s - %(message)s"),
            )
        except ValueError as e:
            raise ConfigError(f"Invalid numeric environment variable: {e}")

    def to_dict(self) -> Dict[str, Any]:
        """Convert settings to dictionary"""
        return dict(self.__dict__)


# Global settings instance - will be created when needed
settings = None


def get_settings() -> Settings:
    """Get the global settings instance, creating it if needed"""
    global settings
    if settings is None:
        settings = Settings.from_env()
    return settings


def reset_settings() -> None:
    """Drop the cached instance so the next call re-reads the environment"""
    global settings
    settings = None
