# app/data/synthetic.py
import numpy as np

from common.api_error import DomainError
from app.schemas import Dataset, Provenance

# keeps data draws independent of network initialization with the same seed
_DATA_STREAM = 0xDA7A


def _check_dims(**counts: int) -> None:
    for name, value in counts.items():
        if value < 1:
            raise DomainError(f"{name} must be >= 1", argument=name, value=value)


def gaussian_blob(n_per_class: int, d: int, mu_scale: float = 1.0, seed: int = 0) -> Dataset:
    """
    Two balanced Gaussian classes: class 0 ~ N(-mu 1, I), class 1 ~ N(+mu 1, I)
    with mu = mu_scale / sqrt(d), rows shuffled with ``seed``.
    """
    _check_dims(n_per_class=n_per_class, d=d)
    rng = np.random.default_rng([_DATA_STREAM, seed])
    mu = mu_scale / np.sqrt(d)
    x0 = rng.standard_normal((n_per_class, d)) - mu
    x1 = rng.standard_normal((n_per_class, d)) + mu
    inputs = np.concatenate([x0, x1], axis=0)
    labels = np.repeat(np.array([0, 1]), n_per_class)
    order = rng.permutation(2 * n_per_class)
    return Dataset(
        inputs=inputs[order],
        labels=labels[order],
        num_classes=2,
        provenance=Provenance(
            source=f"gaussian_blob(n_per_class={n_per_class}, d={d}, mu_scale={mu_scale!r})",
            seed=seed,
        ),
    )


def unlabeled_gaussian(n: int, d: int, seed: int = 0) -> Dataset:
    """N(0, I) inputs, every label 0; the static-ensemble input law."""
    _check_dims(n=n, d=d)
    rng = np.random.default_rng([_DATA_STREAM, seed])
    return Dataset(
        inputs=rng.standard_normal((n, d)),
        labels=np.zeros(n, dtype=np.int64),
        num_classes=1,
        provenance=Provenance(source=f"unlabeled_gaussian(n={n}, d={d})", seed=seed),
    )


__all__ = ["gaussian_blob", "unlabeled_gaussian"]
