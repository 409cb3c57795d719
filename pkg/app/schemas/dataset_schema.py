# app/schemas/dataset_schema.py
from enum import Enum
from pathlib import Path
from typing import Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class Provenance(BaseModel):
    """Where a dataset came from and what was done to it."""

    model_config = ConfigDict(frozen=True)

    source: str
    seed: Optional[int] = None
    file_sha256: tuple[str, ...] = ()
    transforms: tuple[str, ...] = ()
    degenerate_features: tuple[int, ...] = ()

    def then(self, transform: str, **updates: object) -> "Provenance":
        return self.model_copy(
            update={"transforms": (*self.transforms, transform), **updates}
        )


class Dataset(BaseModel):
    """N x d inputs with integer labels in [0, num_classes)."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    inputs: np.ndarray
    labels: np.ndarray
    num_classes: int = Field(..., ge=1)
    provenance: Provenance

    @field_validator("inputs", mode="before")
    @classmethod
    def freeze_inputs(cls, v: object) -> np.ndarray:
        a = np.array(v, dtype=np.float64, copy=True)
        a.setflags(write=False)
        return a

    @field_validator("labels", mode="before")
    @classmethod
    def freeze_labels(cls, v: object) -> np.ndarray:
        a = np.array(v, dtype=np.int64, copy=True)
        a.setflags(write=False)
        return a

    @model_validator(mode="after")
    def validate_dataset(self) -> "Dataset":
        if self.inputs.ndim != 2 or self.inputs.shape[0] < 1:
            raise ValueError(f"inputs must be a non-empty N x d matrix, got {self.inputs.shape}")
        if self.labels.shape != (self.inputs.shape[0],):
            raise ValueError("one label per input row required")
        if self.labels.min() < 0 or self.labels.max() >= self.num_classes:
            raise ValueError(f"labels must lie in [0, {self.num_classes})")
        if not np.isfinite(self.inputs).all():
            raise ValueError("inputs must be finite")
        return self

    @property
    def n(self) -> int:
        return int(self.inputs.shape[0])

    @property
    def dim(self) -> int:
        return int(self.inputs.shape[1])

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.num_classes)

    def subset(self, indices: np.ndarray, transform: str) -> "Dataset":
        return Dataset(
            inputs=self.inputs[indices],
            labels=self.labels[indices],
            num_classes=self.num_classes,
            provenance=self.provenance.then(transform),
        )


class DataSource(str, Enum):
    GAUSSIAN = "gaussian"
    BLOB = "blob"
    CSV = "csv"
    IDX = "idx"

    def __str__(self) -> str:
        return self.value


class DataSpec(BaseModel):
    """How an experiment builds its data; applied transforms run in field order."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    source: DataSource = DataSource.GAUSSIAN
    n: int = Field(10_000, ge=1, description="rows for source=gaussian")
    n_per_class: int = Field(5_000, ge=1, description="rows per class for source=blob")
    dim: Optional[int] = Field(None, ge=1, description="defaults to the network input_dim")
    mu_scale: float = 1.0
    seed: int = Field(0, ge=0)
    # draw a new dataset for every ensemble run (seeded by the run seed)
    fresh_per_run: bool = False

    path: Optional[Path] = None
    label_column: Union[str, int] = "label"
    images_path: Optional[Path] = None
    labels_path: Optional[Path] = None
    scale_pixels: bool = True

    classes: Optional[tuple[int, ...]] = None
    label_map: Optional[dict[int, int]] = None
    standardize: bool = False
    shift: float = 0.0
    test_fraction: float = Field(0.0, ge=0, lt=1)

    @model_validator(mode="after")
    def validate_source_fields(self) -> "DataSpec":
        if self.source == DataSource.CSV and self.path is None:
            raise ValueError("source 'csv' needs 'path'")
        if self.source == DataSource.IDX and (self.images_path is None or self.labels_path is None):
            raise ValueError("source 'idx' needs 'images_path' and 'labels_path'")
        if self.classes is not None and self.label_map is not None:
            raise ValueError("give either 'classes' or 'label_map', not both")
        return self


__all__ = ["Provenance", "Dataset", "DataSource", "DataSpec"]
