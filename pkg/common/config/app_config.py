# common/config/app_config.py
"""
Process-level configuration loaded from ``IGB_`` environment variables.

Experiment definitions live in their own files (see ``app.runner``); this
model only carries what the environment may override.
"""

from pathlib import Path
from typing import Optional

from pydantic import BaseModel, Field, model_validator

from .config_types import EnvLogLevel, Environment
from .env_config import get_env, get_env_int
from .logging_config import LoggingConfig


class RuntimeConfig(BaseModel):
    """Overrides applied on top of an experiment file (file < env < CLI)."""

    out_dir: Optional[Path] = Field(default=None)
    threads: Optional[int] = Field(default=None, ge=1, le=512)
    seed: Optional[int] = Field(default=None, ge=0)
    runs: Optional[int] = Field(default=None, ge=1)

    model_config = {"frozen": True}


class AppConfig(BaseModel):
    """
    Complete process configuration.

    Validated once at startup; invalid configuration fails fast.
    """

    environment: Environment = Environment.DEVELOPMENT
    logging: LoggingConfig
    runtime: RuntimeConfig = RuntimeConfig()

    model_config = {"frozen": True}

    @model_validator(mode="after")
    def validate_production_settings(self) -> "AppConfig":
        if self.environment.is_production and self.logging.log_level == EnvLogLevel.DEBUG:
            raise ValueError("DEBUG log level not allowed in production")
        return self


def load_runtime_config() -> RuntimeConfig:
    """
    Environment variables (all optional):
    - IGB_OUT_DIR: output directory for results
    - IGB_THREADS: worker threads for ensembles
    - IGB_SEED: base seed override
    - IGB_RUNS: run count override
    """
    out_dir = get_env("OUT_DIR")
    return RuntimeConfig(
        out_dir=Path(out_dir) if out_dir else None,
        threads=get_env_int("THREADS"),
        seed=get_env_int("SEED"),
        runs=get_env_int("RUNS"),
    )


def load_app_config() -> AppConfig:
    """
    Load complete process configuration.

    Raises:
        ValidationError: If values are out of range
        ConfigurationError: If values cannot be parsed
    """
    from .logging_config import load_logging_config

    env_str = get_env("ENVIRONMENT", Environment.DEVELOPMENT.value)
    try:
        environment = Environment(env_str)
    except ValueError:
        valid_envs = [e.value for e in Environment]
        raise ValueError(
            f"Invalid IGB_ENVIRONMENT: {env_str}. Must be one of: {valid_envs}"
        )

    return AppConfig(
        environment=environment,
        logging=load_logging_config(),
        runtime=load_runtime_config(),
    )


__all__ = [
    "AppConfig",
    "RuntimeConfig",
    "load_app_config",
    "load_runtime_config",
]
