# app/schemas/experiment_schema.py
import re
from enum import Enum
from pathlib import Path
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .dataset_schema import DataSource, DataSpec
from .metrics_schema import FilterThresholds
from .network_schema import NetworkConfig
from .theory_schema import Regime
from .train_schema import TrainConfig

_LABEL_PATTERN = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_.-]*$")


class ExperimentKind(str, Enum):
    STATIC_ENSEMBLE = "static-ensemble"
    GAMMA_SCAN = "gamma-scan"
    THEORY_TABLE = "theory-table"
    FILTERED_DYNAMICS = "filtered-dynamics"
    DISTRIBUTION_TEST = "dist-test"

    def __str__(self) -> str:
        return self.value


class GammaScanSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    # None: every layer 1..L+1
    layers: Optional[tuple[int, ...]] = None
    # constant input shifts; output-layer gamma per shift
    shifts: Optional[tuple[float, ...]] = None

    @field_validator("layers")
    @classmethod
    def validate_layers(cls, v: Optional[tuple[int, ...]]) -> Optional[tuple[int, ...]]:
        if v is not None and any(layer < 1 for layer in v):
            raise ValueError("layers are numbered from 1")
        return v


class DistTestSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    batch_sizes: tuple[int, ...] = Field((16,), min_length=1)
    samples: int = Field(1_000_000, ge=100, description="normalized values drawn per batch size")
    seed: int = Field(0, ge=0)
    gaussian_limit_batch_size: int = Field(10_000, ge=3)

    @field_validator("batch_sizes")
    @classmethod
    def validate_batch_sizes(cls, v: tuple[int, ...]) -> tuple[int, ...]:
        if any(b < 3 for b in v):
            raise ValueError("leave-one-out statistics need batch sizes >= 3")
        return v


class TheorySpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    batch_sizes: tuple[int, ...] = (5, 8, 16, 32, 64, 128, 256, 1024)

    @field_validator("batch_sizes")
    @classmethod
    def validate_batch_sizes(cls, v: tuple[int, ...]) -> tuple[int, ...]:
        if any(b < 5 for b in v):
            raise ValueError("the rectified BN moments need batch sizes >= 5")
        return v


class DynamicsSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    filter: bool = True
    max_candidates: int = Field(2000, ge=1)
    runs_per_group: int = Field(10, ge=1)
    groups: tuple[Regime, ...] = (Regime.NEUTRAL, Regime.DEEP_PREJUDICE)
    # applied to networks that leave epsilon unset
    epsilon: float = Field(1e-5, ge=0)


class ExperimentConfig(BaseModel):
    """One experiment file, resolved against environment and CLI overrides."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: ExperimentKind
    name: str = "experiment"
    networks: dict[str, NetworkConfig] = Field(default_factory=dict)
    data: DataSpec = DataSpec()
    runs: int = Field(200, ge=1)
    base_seed: int = Field(0, ge=0)
    threads: int = Field(1, ge=1, le=512)
    output_dir: Path = Path("results")
    histogram_bins: int = Field(40, ge=1)
    thresholds: FilterThresholds = FilterThresholds()
    train: Optional[TrainConfig] = None
    gamma: GammaScanSpec = GammaScanSpec()
    dist_test: DistTestSpec = DistTestSpec()
    theory: TheorySpec = TheorySpec()
    dynamics: DynamicsSpec = DynamicsSpec()

    @field_validator("networks")
    @classmethod
    def validate_labels(cls, v: dict[str, NetworkConfig]) -> dict[str, NetworkConfig]:
        # labels become file names
        bad = [label for label in v if not _LABEL_PATTERN.match(label)]
        if bad:
            raise ValueError(f"network labels may only use letters, digits, _ . -: {bad}")
        return v

    @model_validator(mode="after")
    def validate_kind_fields(self) -> "ExperimentConfig":
        needs_networks = {
            ExperimentKind.STATIC_ENSEMBLE,
            ExperimentKind.GAMMA_SCAN,
            ExperimentKind.FILTERED_DYNAMICS,
        }
        if self.kind in needs_networks and not self.networks:
            raise ValueError(f"{self.kind} needs at least one entry under 'networks'")
        if self.kind == ExperimentKind.STATIC_ENSEMBLE and self.runs < 2:
            raise ValueError("static-ensemble needs runs >= 2")
        if self.kind == ExperimentKind.GAMMA_SCAN and self.runs < 10:
            raise ValueError("gamma-scan needs runs >= 10")
        if self.kind == ExperimentKind.FILTERED_DYNAMICS:
            if self.train is None:
                raise ValueError("filtered-dynamics needs a 'train' section")
            if self.data.source == DataSource.GAUSSIAN:
                raise ValueError("filtered-dynamics needs labeled data (blob, csv or idx)")
        if self.kind == ExperimentKind.GAMMA_SCAN and self.gamma.layers is not None:
            for label, net in self.networks.items():
                if max(self.gamma.layers) > net.depth + 1:
                    raise ValueError(
                        f"gamma.layers exceeds the output layer {net.depth + 1} of '{label}'"
                    )
        return self


__all__ = [
    "ExperimentKind",
    "GammaScanSpec",
    "DistTestSpec",
    "TheorySpec",
    "DynamicsSpec",
    "ExperimentConfig",
]
