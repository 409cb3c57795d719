# app/metrics/ks.py
from typing import Callable, NamedTuple, Sequence, Union

import numpy as np
from scipy import integrate, stats

from common.api_error import DomainError

MIN_KS_SAMPLES = 20


class PdfReference(NamedTuple):
    """A density on [lower, upper], integrated numerically into a CDF."""

    pdf: Callable[[np.ndarray], np.ndarray]
    lower: float
    upper: float
    grid_points: int = 200_001


Reference = Union[np.ndarray, Sequence[float], Callable[[np.ndarray], np.ndarray], PdfReference]


def cdf_from_pdf(reference: PdfReference) -> Callable[[np.ndarray], np.ndarray]:
    """Normalized CDF by cumulative trapezoid quadrature on a fine grid."""
    grid = np.linspace(reference.lower, reference.upper, reference.grid_points)
    density = np.asarray(reference.pdf(grid), dtype=np.float64)
    if not np.all(np.isfinite(density)):
        raise DomainError("pdf must be finite on the quadrature grid", argument="pdf")
    cumulative = integrate.cumulative_trapezoid(density, grid, initial=0.0)
    total = cumulative[-1]
    if not total > 0:
        raise DomainError("pdf integrates to zero on the grid", argument="pdf")
    cumulative /= total
    return lambda x: np.interp(x, grid, cumulative, left=0.0, right=1.0)


def ks_distance(samples: Sequence[float], reference: Reference) -> float:
    """
    Sup-norm distance between the empirical CDF of ``samples`` and either a
    second sample set, a CDF callable, or a PdfReference.

    Raises:
        DomainError: fewer than 20 samples
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.size < MIN_KS_SAMPLES:
        raise DomainError(
            f"KS distance needs at least {MIN_KS_SAMPLES} samples", argument="samples", value=x.size
        )
    if isinstance(reference, PdfReference):
        return float(stats.kstest(x, cdf_from_pdf(reference)).statistic)
    if callable(reference):
        return float(stats.kstest(x, reference).statistic)
    other = np.asarray(reference, dtype=np.float64)
    if other.size < MIN_KS_SAMPLES:
        raise DomainError(
            f"KS distance needs at least {MIN_KS_SAMPLES} samples",
            argument="reference",
            value=other.size,
        )
    return float(stats.ks_2samp(x, other).statistic)


__all__ = ["MIN_KS_SAMPLES", "PdfReference", "cdf_from_pdf", "ks_distance"]
