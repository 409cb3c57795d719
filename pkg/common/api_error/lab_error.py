# common/api_error/lab_error.py
"""
Error hierarchy for the laboratory.

Every error carries a machine-readable ``code`` and the process ``exit_code``
the CLI should terminate with, so a failed run can always be reported as
``{"error": code, "message": ..., "details": ...}``.
"""

from typing import Any, Optional


class AppError(Exception):
    """Base error for all laboratory-specific failures."""

    def __init__(
        self,
        message: str,
        code: str = "INTERNAL_ERROR",
        exit_code: int = 1,
        details: Optional[dict[str, Any]] = None,
    ):
        super().__init__(message)
        self.message = message
        self.code = code
        self.exit_code = exit_code
        self.details: dict[str, Any] = dict(details or {})

    def to_report(self) -> dict[str, Any]:
        """Machine-readable error report."""
        return {"error": self.code, "message": self.message, "details": self.details}


class ShapeMismatchError(AppError, ValueError):
    def __init__(self, message: str, expected: Any = None, actual: Any = None):
        super().__init__(
            message,
            code="SHAPE_MISMATCH",
            details={"expected": expected, "actual": actual},
        )


class NonFiniteError(AppError, ValueError):
    def __init__(self, message: str, where: Optional[str] = None):
        super().__init__(message, code="NON_FINITE", details={"where": where})


class DegenerateVarianceError(AppError, ValueError):
    """Raised when a normalizer would divide by an exactly zero spread."""

    def __init__(self, message: str, where: Optional[str] = None):
        super().__init__(message, code="DEGENERATE_VARIANCE", details={"where": where})


class DomainError(AppError, ValueError):
    """Argument outside the domain of a formula or primitive."""

    def __init__(self, message: str, argument: Optional[str] = None, value: Any = None):
        super().__init__(
            message,
            code="DOMAIN_ERROR",
            details={"argument": argument, "value": value},
        )


class EmptyBatchError(AppError, ValueError):
    def __init__(self, message: str = "Batch contains no rows"):
        super().__init__(message, code="EMPTY_BATCH")


class DivergenceError(AppError):
    """Training produced a non-finite loss."""

    def __init__(self, step: int, loss: float):
        super().__init__(
            f"Non-finite loss {loss!r} at step {step}",
            code="DIVERGENCE",
            details={"step": step, "loss": repr(loss)},
        )
        self.step = step


class DataFormatError(AppError, ValueError):
    """Malformed input file; carries the offending file and position."""

    def __init__(
        self,
        message: str,
        path: Optional[str] = None,
        line: Optional[int] = None,
        offset: Optional[int] = None,
    ):
        super().__init__(
            message,
            code="DATA_FORMAT",
            details={"path": path, "line": line, "offset": offset},
        )
        self.path = path
        self.line = line
        self.offset = offset


class IncompatibleResultsError(AppError):
    def __init__(self, message: str, kind_a: Any = None, kind_b: Any = None):
        super().__init__(
            message,
            code="INCOMPATIBLE_RESULTS",
            details={"kind_a": kind_a, "kind_b": kind_b},
        )


__all__ = [
    "AppError",
    "ShapeMismatchError",
    "NonFiniteError",
    "DegenerateVarianceError",
    "DomainError",
    "EmptyBatchError",
    "DivergenceError",
    "DataFormatError",
    "IncompatibleResultsError",
]
