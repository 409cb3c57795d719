# app/schemas/network_schema.py
from enum import Enum
from typing import Any, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class NormKind(str, Enum):
    NONE = "none"
    BATCH = "batch"
    LAYER = "layer"
    # LayerNorm without the mean subtraction
    RMS = "rms"

    def __str__(self) -> str:
        return self.value


class NormPlacement(str, Enum):
    PRE_ACTIVATION = "pre"
    POST_ACTIVATION = "post"
    ABSENT = "absent"

    def __str__(self) -> str:
        return self.value


class ForwardMode(str, Enum):
    """
    TRAIN: BN uses current-batch statistics (leave-one-out if configured).
    EVAL: BN uses the running statistics stored on the network.
    FULL_BATCH: BN uses standard statistics over every row of the batch,
    with no batch-size check (static ensemble semantics).
    """

    TRAIN = "train"
    EVAL = "eval"
    FULL_BATCH = "full_batch"

    def __str__(self) -> str:
        return self.value


class NetworkConfig(BaseModel):
    """Architecture of a ReLU MLP with optional normalization."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    input_dim: int = Field(..., ge=1, description="d")
    hidden_widths: tuple[int, ...] = Field(..., min_length=1)
    num_classes: int = Field(2, ge=2)
    sigma_w2: float = Field(2.0, gt=0, description="Kaiming gain sigma_w^2")
    norm_kind: NormKind = NormKind.NONE
    placement: NormPlacement = NormPlacement.ABSENT
    epsilon: float = Field(0.0, ge=0)
    # None means full-batch statistics
    bn_batch_size: Optional[int] = Field(None, ge=2)
    loo_estimators: bool = False

    @model_validator(mode="before")
    @classmethod
    def expand_depth_width(cls, data: Any) -> Any:
        # depth = 20, width = 100 is shorthand for hidden_widths = [100] * 20
        if isinstance(data, dict) and ("depth" in data or "width" in data):
            data = dict(data)
            depth, width = data.pop("depth", None), data.pop("width", None)
            if depth is None or width is None:
                raise ValueError("'depth' and 'width' must be given together")
            if "hidden_widths" in data:
                raise ValueError("give either hidden_widths or depth/width, not both")
            data["hidden_widths"] = [width] * int(depth)
        return data

    @field_validator("hidden_widths")
    @classmethod
    def validate_widths(cls, v: tuple[int, ...]) -> tuple[int, ...]:
        if any(w < 1 for w in v):
            raise ValueError("all hidden widths must be >= 1")
        return v

    @model_validator(mode="after")
    def validate_norm(self) -> "NetworkConfig":
        if (self.norm_kind == NormKind.NONE) != (self.placement == NormPlacement.ABSENT):
            raise ValueError("placement must be 'absent' exactly when norm_kind is 'none'")
        if self.loo_estimators:
            if self.norm_kind != NormKind.BATCH:
                raise ValueError("loo_estimators requires norm_kind 'batch'")
            if self.bn_batch_size is not None and self.bn_batch_size < 3:
                raise ValueError("leave-one-out statistics need bn_batch_size >= 3")
        return self

    @property
    def depth(self) -> int:
        return len(self.hidden_widths)

    @property
    def layer_widths(self) -> tuple[int, ...]:
        """(d, n1, ..., nL, N_C)"""
        return (self.input_dim, *self.hidden_widths, self.num_classes)

    @property
    def has_norm(self) -> bool:
        return self.norm_kind != NormKind.NONE

    @property
    def uses_minibatch_bn(self) -> bool:
        return self.norm_kind == NormKind.BATCH and self.bn_batch_size is not None

    def label(self) -> str:
        if not self.has_norm:
            kind = "relu"
        elif self.placement == NormPlacement.PRE_ACTIVATION:
            kind = f"{self.norm_kind.value}_relu"
        else:
            kind = f"relu_{self.norm_kind.value}"
        return f"{kind}_L{self.depth}"


ArrayTuple = tuple[np.ndarray, ...]


def _readonly(arrays: Any) -> ArrayTuple:
    out = []
    for a in arrays:
        a = np.array(a, dtype=np.float64, copy=True)
        a.setflags(write=False)
        out.append(a)
    return tuple(out)


class Network(BaseModel):
    """
    A concrete weight realization.

    ``weights[l]`` has shape (n_{l+1}, n_l) for l = 0..L, output layer last.
    Normalization parameters and running statistics exist per hidden layer
    when a norm is configured and are empty tuples otherwise.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    config: NetworkConfig
    weights: ArrayTuple
    biases: ArrayTuple
    norm_scale: ArrayTuple = ()
    norm_shift: ArrayTuple = ()
    running_mean: Optional[ArrayTuple] = None
    running_var: Optional[ArrayTuple] = None

    @field_validator(
        "weights", "biases", "norm_scale", "norm_shift", mode="before"
    )
    @classmethod
    def freeze_arrays(cls, v: Any) -> ArrayTuple:
        return _readonly(v)

    @field_validator("running_mean", "running_var", mode="before")
    @classmethod
    def freeze_optional_arrays(cls, v: Any) -> Optional[ArrayTuple]:
        return None if v is None else _readonly(v)

    @model_validator(mode="after")
    def validate_shapes(self) -> "Network":
        widths = self.config.layer_widths
        if len(self.weights) != len(widths) - 1 or len(self.biases) != len(widths) - 1:
            raise ValueError("one weight matrix and bias per layer required")
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (widths[l + 1], widths[l]):
                raise ValueError(f"weights[{l}] shape {w.shape} != {(widths[l + 1], widths[l])}")
            if b.shape != (widths[l + 1],):
                raise ValueError(f"biases[{l}] shape {b.shape} != {(widths[l + 1],)}")
        hidden = widths[1:-1]
        expected = len(hidden) if self.config.has_norm else 0
        for name in ("norm_scale", "norm_shift"):
            params = getattr(self, name)
            if len(params) != expected:
                raise ValueError(f"{name} needs {expected} entries, got {len(params)}")
            for p, n in zip(params, hidden):
                if p.shape != (n,):
                    raise ValueError(f"{name} entry shape {p.shape} != {(n,)}")
        for name in ("running_mean", "running_var"):
            stats = getattr(self, name)
            if stats is not None and (
                self.config.norm_kind != NormKind.BATCH or len(stats) != len(hidden)
            ):
                raise ValueError(f"{name} only exists per hidden layer of a BN network")
        return self

    @property
    def has_running_stats(self) -> bool:
        return self.running_mean is not None and self.running_var is not None

    def with_parameters(self, **updates: Any) -> "Network":
        """New validated Network with some fields replaced."""
        data = {
            "config": self.config,
            "weights": self.weights,
            "biases": self.biases,
            "norm_scale": self.norm_scale,
            "norm_shift": self.norm_shift,
            "running_mean": self.running_mean,
            "running_var": self.running_var,
        }
        data.update(updates)
        return Network(**data)


__all__ = [
    "NormKind",
    "NormPlacement",
    "ForwardMode",
    "NetworkConfig",
    "Network",
]
