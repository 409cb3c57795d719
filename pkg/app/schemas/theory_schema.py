# app/schemas/theory_schema.py
from enum import Enum
from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator


class Regime(str, Enum):
    """
    Shape of p(G0) implied by gamma: NEUTRAL is a point mass at 1/2
    (gamma = 0), WEAK_PREJUDICE is unimodal around 1/2 (0 < gamma <= 1),
    DEEP_PREJUDICE piles up near 0 and 1 (gamma > 1).
    """

    NEUTRAL = "neutral"
    WEAK_PREJUDICE = "weak_prejudice"
    DEEP_PREJUDICE = "deep_prejudice"

    def __str__(self) -> str:
        return self.value


class GammaSource(str, Enum):
    CLOSED_FORM = "closed_form"
    FULL_BATCH_BN = "full_batch_bn"
    MINI_BATCH_BN = "mini_batch_bn"
    # deeper pre-norm LN/RMS: equal to the no-norm net, estimated empirically
    NO_NORM_EMPIRICAL = "no_norm_empirical"

    def __str__(self) -> str:
        return self.value


class GaussianParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["gaussian"] = "gaussian"
    mean: float = 0.0
    variance: float = Field(..., ge=0)


class PointMass(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["point_mass"] = "point_mass"
    location: float = 0.0


class TheoryPrediction(BaseModel):
    """
    Predicted output statistics of an untrained network.

    ``gamma`` is None when the prediction defers to an empirical estimate of
    the equivalent no-norm network; ``regime`` is then None as well.
    """

    model_config = ConfigDict(frozen=True)

    regime: Optional[Regime]
    gamma: Optional[float] = Field(None, ge=0)
    gamma_source: GammaSource
    output_dist: Optional[GaussianParams] = None
    center_dist: Optional[Union[GaussianParams, PointMass]] = None
    activation_mean: Optional[float] = None
    activation_variance: Optional[float] = None
    note: str = ""

    @model_validator(mode="after")
    def validate_neutrality(self) -> "TheoryPrediction":
        neutral = self.regime == Regime.NEUTRAL
        if neutral != (self.gamma == 0.0):
            raise ValueError("regime is neutral exactly when gamma == 0")
        if neutral and not isinstance(self.center_dist, PointMass):
            raise ValueError("a neutral prediction has a point-mass center")
        return self


class TheoryRow(BaseModel):
    """One row of the BN theory table; batch_size None is the full-batch limit."""

    model_config = ConfigDict(frozen=True)

    batch_size: Optional[int]
    activation_mean: float
    activation_variance: float
    gamma: float
    loo_sigma2_expectation: Optional[float]
    loo_normalized_variance: Optional[float]


__all__ = [
    "Regime",
    "GammaSource",
    "GaussianParams",
    "PointMass",
    "TheoryPrediction",
    "TheoryRow",
]
