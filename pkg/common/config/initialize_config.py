# common/config/initialize_config.py
"""
Configuration initialization module.

Handles the process configuration lifecycle: load ``IGB_`` variables,
validate, configure structlog, store.
"""

from typing import Optional, List
from pydantic import ValidationError
from .app_config import AppConfig, load_app_config
from .structlog_config import configure_structlog
from common.api_error import ConfigurationError


class _ConfigState:
    """
    Singleton holding the process configuration.
    """

    _instance: Optional["_ConfigState"] = None
    _config: Optional[AppConfig]

    def __new__(cls) -> "_ConfigState":
        if cls._instance is None:
            instance = super().__new__(cls)
            instance._config = None
            cls._instance = instance
        return cls._instance

    @property
    def config(self) -> AppConfig:
        if not self._config:
            raise RuntimeError(
                "Configuration not initialized. Call initialize_config() at startup."
            )
        return self._config

    def set_config(self, config: Optional[AppConfig]) -> None:
        self._config = config


_state = _ConfigState()


def validation_violations(error: ValidationError) -> List[str]:
    """Flatten a pydantic error into ``field.path: message`` entries."""
    violations: List[str] = []
    for item in error.errors():
        field = ".".join(str(x) for x in item["loc"]) or "<root>"
        violations.append(f"{field}: {item['msg']}")
    return violations


def configuration_error_from(error: ValidationError, title: str) -> ConfigurationError:
    violations = validation_violations(error)
    return ConfigurationError(
        f"{title}:\n" + "\n".join(f"  - {v}" for v in violations),
        violations=violations,
    )


def initialize_config() -> AppConfig:
    """
    Initialize and validate the process configuration.

    Must be called once at startup, after ``load_dotenv()``, before any
    experiment code runs.

    Raises:
        ConfigurationError: If configuration is invalid or missing
    """
    try:
        config = load_app_config()
    except ValidationError as e:
        raise configuration_error_from(e, "Configuration validation failed") from e
    except ValueError as e:
        if isinstance(e, ConfigurationError):
            raise
        raise ConfigurationError(str(e), violations=[str(e)]) from e

    configure_structlog(config.logging.level_int, config.logging.log_format)
    _state.set_config(config)
    return config


def get_config() -> AppConfig:
    """
    Raises:
        RuntimeError: If not initialized
    """
    return _state.config


def reset_config() -> None:
    """FOR TESTING ONLY."""
    _state.set_config(None)


__all__ = [
    "initialize_config",
    "get_config",
    "reset_config",
    "validation_violations",
    "configuration_error_from",
]
