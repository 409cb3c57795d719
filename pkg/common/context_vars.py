# common/context_vars.py
from contextvars import ContextVar
from typing import Optional, Any

# Stage timer of the experiment currently running in this context
stage_timer_context_var: ContextVar[Optional[Any]] = ContextVar(
    "stage_timer",
    default=None,
)

__all__ = ["stage_timer_context_var"]
