# app/theory/special_functions.py
"""Special functions used by the closed forms, backed by scipy.special (Cephes)."""

from typing import Union

import numpy as np
from scipy import special

from common.api_error import DomainError

ArrayLike = Union[float, np.ndarray]


def _out(value: np.ndarray) -> ArrayLike:
    return float(value) if np.ndim(value) == 0 else value


def std_normal_pdf(x: ArrayLike) -> ArrayLike:
    x = np.asarray(x, dtype=np.float64)
    return _out(np.exp(-0.5 * x * x) / np.sqrt(2.0 * np.pi))


def std_normal_cdf(x: ArrayLike) -> ArrayLike:
    return _out(special.ndtr(np.asarray(x, dtype=np.float64)))


def std_normal_quantile(p: ArrayLike) -> ArrayLike:
    """
    Inverse of the standard normal CDF on (0, 1).

    Raises:
        DomainError: any p outside the open interval, including 0 and 1
    """
    p = np.asarray(p, dtype=np.float64)
    if np.any(~((p > 0.0) & (p < 1.0))):
        raise DomainError("quantile needs p in (0, 1)", argument="p", value=p.tolist())
    return _out(special.ndtri(p))


def log_gamma(x: ArrayLike) -> ArrayLike:
    """log |Gamma(x)|."""
    return _out(special.gammaln(np.asarray(x, dtype=np.float64)))


def gamma_ratio(a: ArrayLike, b: ArrayLike) -> ArrayLike:
    """Gamma(a) / Gamma(b) in log space, safe for large arguments."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return _out(np.exp(special.gammaln(a) - special.gammaln(b)))


def erf(x: ArrayLike) -> ArrayLike:
    return _out(special.erf(np.asarray(x, dtype=np.float64)))


__all__ = [
    "std_normal_pdf",
    "std_normal_cdf",
    "std_normal_quantile",
    "log_gamma",
    "gamma_ratio",
    "erf",
]
