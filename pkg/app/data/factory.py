# app/data/factory.py
from typing import Optional

from common.api_error import ConfigurationError
from app.schemas import DataSource, DataSpec, Dataset
from .loaders import load_csv, load_idx
from .synthetic import gaussian_blob, unlabeled_gaussian
from .transforms import remap_labels, select_classes, shift_pixels, standardize


def build_dataset(
    spec: DataSpec, seed: Optional[int] = None, input_dim: Optional[int] = None
) -> Dataset:
    """
    Materialize ``spec``: generate or load, then apply class selection or
    label map, standardization and shift, in that order.

    ``seed`` overrides ``spec.seed`` for synthetic sources (fresh data per
    run); ``input_dim`` fills ``spec.dim`` when it is unset.
    """
    seed = spec.seed if seed is None else seed
    dim = spec.dim or input_dim
    if spec.source == DataSource.GAUSSIAN:
        if dim is None:
            raise ConfigurationError(
                "gaussian data needs a dimension", violations=["data.dim: unset"]
            )
        data = unlabeled_gaussian(spec.n, dim, seed)
    elif spec.source == DataSource.BLOB:
        if dim is None:
            raise ConfigurationError("blob data needs a dimension", violations=["data.dim: unset"])
        data = gaussian_blob(spec.n_per_class, dim, spec.mu_scale, seed)
    elif spec.source == DataSource.CSV:
        data = load_csv(spec.path, spec.label_column)  # type: ignore[arg-type]
    else:
        data = load_idx(
            spec.images_path,  # type: ignore[arg-type]
            spec.labels_path,  # type: ignore[arg-type]
            scale=spec.scale_pixels,
        )

    if spec.classes is not None:
        data = select_classes(data, spec.classes)
    if spec.label_map is not None:
        data = remap_labels(data, spec.label_map)
    if spec.standardize:
        data = standardize(data)
    if spec.shift != 0.0:
        data = shift_pixels(data, spec.shift)
    if input_dim is not None and data.dim != input_dim:
        raise ConfigurationError(
            f"data has {data.dim} features but the network expects {input_dim}",
            violations=[f"data: dimension {data.dim} != input_dim {input_dim}"],
        )
    return data


__all__ = ["build_dataset"]
