# app/schemas/train_schema.py
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class TrainConfig(BaseModel):
    """
    Plain mini-batch SGD on softmax cross-entropy.

    A learning rate of 0 is accepted and freezes the network, which is handy
    for checking the bookkeeping.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    learning_rate: float = Field(1e-3, ge=0)
    batch_size: int = Field(512, ge=1)
    steps: int = Field(2000, ge=0)
    eval_cadence: int = Field(20, ge=1)
    relabel_dominant: bool = True
    seed: int = Field(0, ge=0)
    bn_momentum: float = Field(0.9, ge=0, lt=1)
    convergence_level: float = Field(0.6, gt=0, le=1)


class EvalRecord(BaseModel):
    """Metrics of one evaluation step, all from integer counts."""

    model_config = ConfigDict(frozen=True)

    step: int
    loss: float
    train_accuracy: float = Field(..., ge=0, le=1)
    train_class_accuracy: tuple[float, ...]
    guess_fractions: tuple[float, ...]
    test_accuracy: Optional[float] = Field(None, ge=0, le=1)
    test_class_accuracy: Optional[tuple[float, ...]] = None

    @property
    def max_guess_fraction(self) -> float:
        return max(self.guess_fractions)


class TrainTrajectory(BaseModel):
    """
    Evaluation records of one training run.

    ``permutation[k]`` is the original class shown as class k; the identity
    unless the view was relabeled so class 0 is the initially dominant class.
    """

    model_config = ConfigDict(frozen=True)

    records: tuple[EvalRecord, ...]
    class_priors: tuple[float, ...]
    test_class_priors: Optional[tuple[float, ...]] = None
    permutation: tuple[int, ...]
    relabeled: bool = False
    seed: int = 0

    @model_validator(mode="after")
    def validate_permutation(self) -> "TrainTrajectory":
        if sorted(self.permutation) != list(range(len(self.class_priors))):
            raise ValueError("permutation must be a permutation of the classes")
        return self

    @property
    def num_classes(self) -> int:
        return len(self.class_priors)

    @property
    def steps(self) -> tuple[int, ...]:
        return tuple(r.step for r in self.records)

    @property
    def initial(self) -> EvalRecord:
        return self.records[0]


class SeriesSummary(BaseModel):
    model_config = ConfigDict(frozen=True)

    mean: tuple[float, ...]
    se: tuple[float, ...]


class TrajectorySummary(BaseModel):
    """Per-step mean and standard error of every series across runs."""

    model_config = ConfigDict(frozen=True)

    steps: tuple[int, ...]
    n_runs: int
    series: dict[str, SeriesSummary]


class Gradients(BaseModel):
    """Gradients of the mean cross-entropy, shaped like the network parameters."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    loss: float
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    norm_scale: tuple[np.ndarray, ...] = ()
    norm_shift: tuple[np.ndarray, ...] = ()
    inputs: Optional[np.ndarray] = None


__all__ = [
    "TrainConfig",
    "EvalRecord",
    "TrainTrajectory",
    "SeriesSummary",
    "TrajectorySummary",
    "Gradients",
]
