#!/usr/bin/env python3
"""
Configuration Validation Script
Checks the environment settings and, optionally, run config files
"""
import os
import sys
from pathlib import Path

from dotenv import load_dotenv

# Load .env file first
load_dotenv()

# Add the project root to the Python path
sys.path.insert(0, str(Path(__file__).parent))

from config.env_loader import EnvironmentLoader, load_environment_config
from config.run_config import load_run_config, resolve_run_config
from config.settings import Settings
from errors import SurvivalToolError


def validate_configuration() -> bool:
    """Validate the environment-backed settings"""
    print("🔍 Validating Configuration...")
    print("=" * 50)

    try:
        applied = load_environment_config()
        settings = Settings.from_env()

        print("✅ Configuration loaded successfully!")
        print(f"📊 Environment: {settings.environment}")
        print(f"📝 Log Level: {settings.log_level}")
        print(f"🧩 Applied from environment file: {', '.join(applied) if applied else 'nothing'}")
        print()

        print("⚡ Run Defaults:")
        for name, value in [
            ("Output Directory", settings.output_dir),
            ("RNG Seed", settings.rng_seed if settings.rng_seed is not None else "unset (0)"),
            ("Threads", settings.threads),
            ("Band MC Draws", settings.mc_draws),
        ]:
            print(f"  📊 {name}: {value}")
        print()

        available = EnvironmentLoader(settings.config_dir).get_available_environments()
        print(f"🌍 Available environments: {', '.join(available) if available else 'none'}")
        return True

    except SurvivalToolError as e:
        print(f"❌ Configuration validation failed: {e}")
        return False


def validate_run_config(path: str) -> bool:
    """Resolve a run config file exactly as the CLI would"""
    try:
        cfg = resolve_run_config(load_run_config(path), settings=Settings.from_env())
    except SurvivalToolError as e:
        print(f"  ❌ {path}: {e}")
        for line in e.context.get("errors", []):
            print(f"     • {line}")
        return False
    print(f"  ✅ {path}: {cfg.command}, methods={','.join(cfg.methods)}, arms={cfg.arms}")
    return True


def show_environment_info():
    """Show current environment information"""
    print("🌍 Environment Information:")
    print("=" * 50)
    for var in ["ENVIRONMENT", "LOG_LEVEL", "OUTPUT_DIR", "RNG_SEED", "THREADS", "MC_DRAWS"]:
        print(f"  {var}: {os.getenv(var, 'Not set')}")


if __name__ == "__main__":
    print("🚀 Survival Curve Toolkit Configuration Validator")
    print("=" * 50)

    show_environment_info()
    print()

    success = validate_configuration()
    config_files = sys.argv[1:]
    if config_files:
        print()
        print("🧪 Run config files:")
        success = all([validate_run_config(path) for path in config_files]) and success

    if success:
        print("\n✅ All checks passed! Configuration is ready.")
        sys.exit(0)
    else:
        print("\n❌ Configuration validation failed!")
        print("\n💡 To fix:")
        print("1. Check the values in .env or config/environments/<ENVIRONMENT>.env")
        print("2. Run: python validate_config.py <run-config.yml> to see field errors")
        sys.exit(1)
