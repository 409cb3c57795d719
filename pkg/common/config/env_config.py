# common/config/env_config.py
import os
from typing import Optional
from common.api_error import ConfigurationError

ENV_PREFIX = "IGB_"


def env_key(name: str) -> str:
    """Prefixed environment variable name, e.g. ``SEED`` -> ``IGB_SEED``."""
    return name if name.startswith(ENV_PREFIX) else f"{ENV_PREFIX}{name}"


def get_env(name: str, default: Optional[str] = None) -> Optional[str]:
    """
    Get a prefixed env variable with optional default.
    Empty strings count as unset.
    """
    value = os.getenv(env_key(name))
    return value if value else default


def require_env(name: str) -> str:
    """
    Get required environment variable or raise immediately.
    """
    value = get_env(name)
    if not value:
        raise ConfigurationError(
            f"Missing required env variable: {env_key(name)}",
            violations=[f"{env_key(name)}: missing"],
        )
    return value


def get_env_int(name: str, default: Optional[int] = None) -> Optional[int]:
    """Integer env variable; a non-integer value is a configuration error."""
    raw = get_env(name)
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigurationError(
            f"{env_key(name)} must be an integer, got {raw!r}",
            violations=[f"{env_key(name)}: not an integer"],
        ) from exc


__all__ = ["ENV_PREFIX", "env_key", "require_env", "get_env", "get_env_int"]
