# common/config/logging_config.py
from dataclasses import dataclass
from .env_config import get_env, env_key
from .config_types import EnvLogLevel, EnvLogFormat
from common.api_error import ConfigurationError

_default_log_level_env_key = "LOG_LEVEL"
_default_log_format_env_key = "LOG_FORMAT"


@dataclass(frozen=True)
class LoggingConfig:
    """Logging configuration."""

    log_level: EnvLogLevel = EnvLogLevel.INFO
    log_format: EnvLogFormat = EnvLogFormat.CONSOLE

    @property
    def level_value(self) -> str:
        return self.log_level.value

    @property
    def level_int(self) -> int:
        return self.log_level.level


def load_logging_config(
    log_level_env_key: str = _default_log_level_env_key,
    log_format_env_key: str = _default_log_format_env_key,
) -> LoggingConfig:
    """
    Load logging configuration from ``IGB_LOG_LEVEL`` / ``IGB_LOG_FORMAT``.

    Raises:
        ConfigurationError: If either value is not a known member
    """
    try:
        return LoggingConfig(
            log_level=EnvLogLevel(
                get_env(log_level_env_key, "INFO").upper()  # type: ignore[union-attr]
            ),
            log_format=EnvLogFormat(
                get_env(log_format_env_key, "console").lower()  # type: ignore[union-attr]
            ),
        )
    except ValueError as exc:
        valid_levels = ", ".join(level.value for level in EnvLogLevel)
        valid_formats = ", ".join(fmt.value for fmt in EnvLogFormat)
        raise ConfigurationError(
            "Invalid logging configuration",
            violations=[
                f"{env_key(log_level_env_key)}: must be one of [{valid_levels}]",
                f"{env_key(log_format_env_key)}: must be one of [{valid_formats}]",
            ],
        ) from exc


__all__ = [
    "LoggingConfig",
    "load_logging_config",
]
