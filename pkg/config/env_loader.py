"""
Environment Loader Utility
Handles loading environment-specific configurations
"""
import os
from pathlib import Path
from typing import Dict, List, Optional
import logging

from dotenv import dotenv_values

logger = logging.getLogger(__name__)


class EnvironmentLoader:
    """Loads environment-specific configuration files"""

    def __init__(self, config_dir: str = "config"):
        self.config_dir = Path(config_dir)
        self.environments_dir = self.config_dir / "environments"

    def load_environment_file(self, environment: str) -> Dict[str, str]:
        """Load environment-specific configuration file"""
        env_file = self.environments_dir / f"{environment}.env"

        if not env_file.exists():
            logger.debug(f"Environment file not found: {env_file}")
            return {}

        config = {k: v for k, v in dotenv_values(env_file).items() if v is not None}
        logger.info(f"Loaded {len(config)} settings from {env_file}")
        return config

    def apply_environment_config(self, environment: str) -> List[str]:
        """Apply environment-specific configuration to os.environ, returning the keys set"""
        applied = []
        for key, value in self.load_environment_file(environment).items():
            if key not in os.environ:  # Don't override existing env vars
                os.environ[key] = value
                applied.append(key)
                logger.debug(f"Set {key} from environment config")
        return applied

    def get_available_environments(self) -> List[str]:
        """Get list of available environment configurations"""
        if not self.environments_dir.exists():
            return []
        return sorted(env_file.stem for env_file in self.environments_dir.glob("*.env"))


def load_environment_config(environment: Optional[str] = None, config_dir: str = "config") -> List[str]:
    """Load environment configuration"""
    if environment is None:
        environment = os.getenv("ENVIRONMENT", "development")

    loader = EnvironmentLoader(config_dir)
    applied = loader.apply_environment_config(environment)
    logger.debug(f"Environment configuration loaded for: {environment}")
    return applied
