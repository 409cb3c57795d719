# app/schemas/norm_schema.py
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field


class EstimatorKind(str, Enum):
    STANDARD = "standard"
    LEAVE_ONE_OUT = "leave_one_out"
    # stored running averages (Eval mode)
    RUNNING = "running"

    def __str__(self) -> str:
        return self.value


class NormAxis(str, Enum):
    BATCH = "batch"  # statistics per node, over samples
    LAYER = "layer"  # statistics per sample, over nodes

    def __str__(self) -> str:
        return self.value


class NormStats(BaseModel):
    """
    Statistics used by one normalization call.

    ``mean`` and ``std`` broadcast against the normalized input: shape (n,)
    for standard BN, (B, n) for leave-one-out BN, (B, 1) for LN/RMS rows.
    ``std`` is the raw spread estimate; the divisor actually applied is
    ``denominator`` = sqrt(std^2 + epsilon).
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    mean: np.ndarray
    std: np.ndarray
    denominator: np.ndarray
    epsilon: float = Field(..., ge=0)
    estimator: EstimatorKind
    axis: NormAxis
    subtract_mean: bool = True
    variance_convention: str = Field(..., description="biased | loo_b_minus_1 | running")


__all__ = ["EstimatorKind", "NormAxis", "NormStats"]
