# app/schemas/metrics_schema.py
from typing import Any, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .theory_schema import Regime


class GuessStats(BaseModel):
    """
    Class assignment fractions of a network over a dataset.

    ``counts`` are the integer numbers of rows predicted per class; fractions
    are derived from them so N * G_c is always an integer.
    """

    model_config = ConfigDict(frozen=True)

    counts: tuple[int, ...] = Field(..., min_length=2)

    @model_validator(mode="after")
    def validate_counts(self) -> "GuessStats":
        if any(c < 0 for c in self.counts) or sum(self.counts) == 0:
            raise ValueError("counts must be non-negative with a positive total")
        return self

    @property
    def n(self) -> int:
        return sum(self.counts)

    @property
    def num_classes(self) -> int:
        return len(self.counts)

    @property
    def fractions(self) -> tuple[float, ...]:
        n = self.n
        return tuple(c / n for c in self.counts)

    @property
    def ranked(self) -> tuple[float, ...]:
        """G-hat: fractions sorted in decreasing order."""
        return tuple(sorted(self.fractions, reverse=True))

    @property
    def dominant_class(self) -> int:
        # lowest index among ties
        return int(np.argmax(self.counts))

    @property
    def g0(self) -> float:
        return self.fractions[0]

    @property
    def top_fraction(self) -> float:
        return max(self.counts) / self.n


class Histogram(BaseModel):
    model_config = ConfigDict(frozen=True)

    edges: tuple[float, ...]
    counts: tuple[int, ...]

    @model_validator(mode="after")
    def validate_bins(self) -> "Histogram":
        if len(self.edges) != len(self.counts) + 1:
            raise ValueError("histogram needs len(edges) == len(counts) + 1")
        return self

    def mass_within(self, low: float, high: float) -> float:
        """Fraction of samples in bins lying entirely inside [low, high]."""
        total = sum(self.counts)
        inside = sum(
            c
            for c, lo, hi in zip(self.counts, self.edges[:-1], self.edges[1:])
            if lo >= low - 1e-12 and hi <= high + 1e-12
        )
        return inside / total if total else 0.0


class EnsembleResult(BaseModel):
    """G0 samples over an ensemble of initializations, one per seed."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    seeds: tuple[int, ...]
    samples: tuple[float, ...]
    top_fractions: tuple[float, ...]
    guess_stats: tuple[GuessStats, ...]
    histogram: Histogram
    # per run x output node dataset means and variances
    output_means: np.ndarray
    output_vars: np.ndarray
    config_snapshot: dict[str, Any]
    metadata: dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def validate_sizes(self) -> "EnsembleResult":
        n = len(self.seeds)
        if len(self.samples) != n or len(self.top_fractions) != n or len(self.guess_stats) != n:
            raise ValueError("one sample per seed required")
        if sum(self.histogram.counts) != n:
            raise ValueError("histogram counts must sum to the sample count")
        return self


class LayerGammaEstimate(BaseModel):
    model_config = ConfigDict(frozen=True)

    layer: int = Field(..., ge=1)
    gamma: float = Field(..., ge=0)
    gamma_se: float
    var_w: float = Field(..., ge=0, description="variance over the ensemble of node dataset means")
    var_d: float = Field(..., gt=0, description="mean over the ensemble of node dataset variances")
    gamma_per_node: float = Field(..., ge=0)
    n_runs: int
    n_nodes: int


class VarianceRatioReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    layers: tuple[LayerGammaEstimate, ...]
    n_runs: int
    n_samples: int
    seeds: tuple[int, ...]
    config_snapshot: dict[str, Any]

    def at(self, layer: int) -> LayerGammaEstimate:
        for estimate in self.layers:
            if estimate.layer == layer:
                return estimate
        raise KeyError(layer)


class FilterThresholds(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    neutral_halfwidth: float = Field(0.05, gt=0, lt=0.5)
    deep_threshold: float = Field(0.95, gt=0.5, lt=1)


class FilterResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    neutral: tuple[int, ...] = ()
    weak_prejudice: tuple[int, ...] = ()
    deep_prejudice: tuple[int, ...] = ()
    thresholds: FilterThresholds = FilterThresholds()

    def group(self, regime: Regime) -> tuple[int, ...]:
        return getattr(self, regime.value)

    def census(self) -> dict[str, int]:
        return {r.value: len(self.group(r)) for r in Regime}


class NormEquivalenceReport(BaseModel):
    """LayerNorm versus RMSNorm on the same pre-activations, per hidden layer."""

    model_config = ConfigDict(frozen=True)

    max_abs_difference: tuple[float, ...]
    max_abs_layer_mean: tuple[float, ...]


__all__ = [
    "GuessStats",
    "Histogram",
    "EnsembleResult",
    "LayerGammaEstimate",
    "VarianceRatioReport",
    "FilterThresholds",
    "FilterResult",
    "NormEquivalenceReport",
]
