# app/data/transforms.py
"""Dataset transforms. Every transform returns a new Dataset and extends its provenance."""

from typing import Mapping, Sequence, Tuple

import numpy as np

from common.api_error import DomainError
from app.schemas import Dataset


def shift_pixels(data: Dataset, c: float) -> Dataset:
    return Dataset(
        inputs=data.inputs + c,
        labels=data.labels,
        num_classes=data.num_classes,
        provenance=data.provenance.then(f"shift({c!r})"),
    )


def standardize(data: Dataset) -> Dataset:
    """
    Per-feature zero mean and unit (biased) variance over the dataset.
    Constant features are only centered and recorded in the provenance.
    """
    x = data.inputs
    mean = x.mean(axis=0)
    centered = x - mean
    std = np.sqrt(np.mean(centered**2, axis=0))
    constant = np.ptp(x, axis=0) == 0
    centered[:, constant] = 0.0
    std = np.where(constant, 1.0, std)
    degenerate = tuple(int(i) for i in np.flatnonzero(constant))
    return Dataset(
        inputs=centered / std,
        labels=data.labels,
        num_classes=data.num_classes,
        provenance=data.provenance.then(
            "standardize",
            degenerate_features=tuple(
                sorted(set(data.provenance.degenerate_features) | set(degenerate))
            ),
        ),
    )


def remap_labels(data: Dataset, table: Mapping[int, int]) -> Dataset:
    """Map every label through ``table`` (e.g. digit -> parity)."""
    present = np.unique(data.labels)
    missing = [int(c) for c in present if int(c) not in table]
    if missing:
        raise DomainError("label map does not cover every label", argument="table", value=missing)
    lookup = np.array([table.get(c, -1) for c in range(int(present.max()) + 1)], dtype=np.int64)
    labels = lookup[data.labels]
    targets = sorted(set(table.values()))
    if targets[0] < 0:
        raise DomainError("mapped labels must be >= 0", argument="table", value=targets[0])
    return Dataset(
        inputs=data.inputs,
        labels=labels,
        num_classes=max(targets) + 1,
        provenance=data.provenance.then(f"remap_labels({dict(sorted(table.items()))})"),
    )


def select_classes(data: Dataset, classes: Sequence[int]) -> Dataset:
    """Keep rows of ``classes`` only, relabeled 0..k-1 in the given order."""
    classes = [int(c) for c in classes]
    if len(set(classes)) != len(classes) or not classes:
        raise DomainError(
            "classes must be distinct and non-empty", argument="classes", value=classes
        )
    mask = np.isin(data.labels, classes)
    if not mask.any():
        raise DomainError(
            "no rows belong to the selected classes", argument="classes", value=classes
        )
    relabel = {c: i for i, c in enumerate(classes)}
    labels = np.array([relabel[int(c)] for c in data.labels[mask]], dtype=np.int64)
    return Dataset(
        inputs=data.inputs[mask],
        labels=labels,
        num_classes=len(classes),
        provenance=data.provenance.then(f"select_classes({classes})"),
    )


def train_test_split(data: Dataset, test_fraction: float, seed: int) -> Tuple[Dataset, Dataset]:
    """Seeded shuffle then split; the test part gets round(N * test_fraction) rows."""
    if not 0 < test_fraction < 1:
        raise DomainError(
            "test_fraction must lie in (0, 1)", argument="test_fraction", value=test_fraction
        )
    order = np.random.default_rng(seed).permutation(data.n)
    n_test = int(round(data.n * test_fraction))
    if n_test == 0 or n_test == data.n:
        raise DomainError(
            "split leaves an empty part", argument="test_fraction", value=test_fraction
        )
    return (
        data.subset(order[n_test:], f"train_split({test_fraction!r}, seed={seed})"),
        data.subset(order[:n_test], f"test_split({test_fraction!r}, seed={seed})"),
    )


__all__ = [
    "shift_pixels",
    "standardize",
    "remap_labels",
    "select_classes",
    "train_test_split",
]
