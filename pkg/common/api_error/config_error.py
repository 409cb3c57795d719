# common/api_error/config_error.py
from typing import Optional, Sequence

from .lab_error import AppError


class ConfigurationError(AppError, RuntimeError):
    """
    Raised when process or experiment configuration is invalid.

    ``violations`` lists every offending field as ``field.path: message``.
    """

    def __init__(self, message: str, violations: Optional[Sequence[str]] = None):
        self.violations = list(violations or [])
        super().__init__(
            message,
            code="CONFIG_ERROR",
            exit_code=2,
            details={"violations": self.violations},
        )


__all__ = ["ConfigurationError"]
