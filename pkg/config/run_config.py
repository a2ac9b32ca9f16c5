"""
Run Configuration
Validated per-run settings resolved from flags, a config file and the environment
"""
import logging
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from data.loader import CsvSchema
from errors import ConfigError
from estimators.models import Method
from nuisance.basis import NuisanceConfig
from .settings import Settings

logger = logging.getLogger(__name__)

DEFAULT_METHODS = ["km", "plugin", "ipcw", "ee", "tmle", "moss-l2"]


class TargetingConfig(BaseModel):
    """Loop controls of the two TMLEs"""
    model_config = ConfigDict(extra="forbid")

    step_bound: float = Field(default=0.01, gt=0)
    stop_norm: float = Field(default=1e-3, gt=0)
    max_iter: int = Field(default=500, ge=1)
    tmle_max_iter: int = Field(default=50, ge=1)
    tmle_tol: float = Field(default=1e-3, gt=0)

    def to_kwargs(self) -> Dict[str, Any]:
        return self.model_dump()


class StudyConfig(BaseModel):
    """Monte-Carlo study on simulated data"""
    model_config = ConfigDict(extra="forbid")

    n: int = Field(default=1000, ge=2)
    reps: int = Field(default=200, ge=2)
    t_max: int = Field(default=21, ge=1)
    coverage: bool = True
    band_draws: int = Field(default=1000, ge=100)
    oracle_draws: int = Field(default=1_000_000, ge=1000)
    use_simulation_basis: bool = True


class MonotonicityConfig(BaseModel):
    """Repeated-subsampling experiment on an input dataset"""
    model_config = ConfigDict(extra="forbid")

    sizes: List[int] = Field(default_factory=lambda: [100, 500])
    reps: int = Field(default=100, ge=1)


class RunConfig(BaseModel):
    """Everything needed to reproduce one CLI run"""
    model_config = ConfigDict(extra="forbid")

    command: Literal["estimate", "simulate", "diagnose", "monotonicity"] = "estimate"
    input: Optional[str] = None
    columns: CsvSchema = Field(default_factory=CsvSchema)
    methods: List[str] = Field(default_factory=lambda: list(DEFAULT_METHODS))
    arms: List[int] = Field(default_factory=lambda: [0, 1])
    difference: bool = True
    alpha: float = Field(default=0.05, gt=0, lt=1)
    band: Literal["none", "pointwise", "simultaneous"] = "simultaneous"
    nuisance: NuisanceConfig = Field(default_factory=NuisanceConfig)
    targeting: TargetingConfig = Field(default_factory=TargetingConfig)
    truncate_at: Optional[float] = None
    rescale: int = Field(default=1, ge=1)
    seed: int = 0
    mc_draws: int = Field(default=10000, ge=100)
    threads: int = Field(default=1, ge=1)
    output: str = "runouts"
    formats: List[Literal["csv", "json"]] = Field(default_factory=lambda: ["csv", "json"])
    export_long: bool = False
    study: StudyConfig = Field(default_factory=StudyConfig)
    monotonicity: MonotonicityConfig = Field(default_factory=MonotonicityConfig)

    @field_validator("methods")
    @classmethod
    def _known_methods(cls, value: List[str]) -> List[str]:
        if not value:
            raise ValueError("at least one method is required")
        return [Method.parse(m).value for m in value]

    @field_validator("arms")
    @classmethod
    def _binary_arms(cls, value: List[int]) -> List[int]:
        if not value or not set(value) <= {0, 1}:
            raise ValueError("arms must be a non-empty subset of [0, 1]")
        return sorted(set(value))


def load_run_config(path: Union[str, Path]) -> Dict[str, Any]:
    """Read a YAML or JSON config file into a plain dict"""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"Config file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            content = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ConfigError(f"Invalid YAML/JSON in config file {path}: {e}")
    if content is None:
        return {}
    if not isinstance(content, dict):
        raise ConfigError(f"Config file must contain a mapping, got {type(content).__name__}: {path}")
    return content


def _deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def _drop_unset(values: Dict[str, Any]) -> Dict[str, Any]:
    cleaned = {}
    for key, value in values.items():
        if isinstance(value, dict):
            value = _drop_unset(value)
            if not value:
                continue
        if value is not None:
            cleaned[key] = value
    return cleaned


def resolve_run_config(file_values: Optional[Dict[str, Any]] = None, flag_values: Optional[Dict[str, Any]] = None,
                       settings: Optional[Settings] = None) -> RunConfig:
    """
    Merge sources with precedence flag > file > environment settings > default.

    Flags left as None do not override anything.
    """
    env_values: Dict[str, Any] = {}
    if settings is not None:
        env_values = {"threads": settings.threads, "mc_draws": settings.mc_draws, "output": settings.output_dir}
        if settings.rng_seed is not None:
            env_values["seed"] = settings.rng_seed
    merged = _deep_merge(env_values, file_values or {})
    merged = _deep_merge(merged, _drop_unset(flag_values or {}))
    try:
        cfg = RunConfig(**merged)
    except ValidationError as e:
        raise ConfigError(f"Invalid run configuration: {e.error_count()} error(s)",
                          {"errors": [f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()]})
    logger.debug(f"Resolved run config: {cfg.model_dump()}")
    return cfg
