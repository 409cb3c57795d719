# app/theory/densities.py
"""
Closed-form densities and moments.

The leave-one-out normalized variable z of a Gaussian batch of size B is a
scaled Student-t with B - 2 degrees of freedom:

    p(z) = Gamma((B-1)/2) / (Gamma((B-2)/2) sqrt(B pi)) * (1 + z^2/B)^(-(B-1)/2)

With output centers m ~ N(0, Var_W) and per-sample spread Var_D, the class-0
fraction is G0 = Phi(Z), Z ~ N(0, gamma), gamma = Var_W / Var_D, hence

    p(g) = phi(Phi^-1(g) / sqrt(gamma)) / (sqrt(gamma) phi(Phi^-1(g))).
"""

from typing import Optional, Tuple

import numpy as np
from scipy import special, stats

from common.api_error import DomainError
from .special_functions import ArrayLike, gamma_ratio, std_normal_quantile


def _out(value: np.ndarray) -> ArrayLike:
    return float(value) if np.ndim(value) == 0 else value


def _check_batch(B: float, minimum: int, op: str) -> None:
    if not B >= minimum:
        raise DomainError(f"{op} needs B >= {minimum}", argument="B", value=B)


def rectified_gaussian_moments(mu: float, sigma: float) -> Tuple[float, float]:
    """
    Mean and variance of max(0, X) for X ~ N(mu, sigma^2).

    Raises:
        DomainError: sigma <= 0
    """
    if not sigma > 0:
        raise DomainError("sigma must be > 0", argument="sigma", value=sigma)
    r = mu / sigma
    cdf = special.ndtr(r)
    pdf = np.exp(-0.5 * r * r) / np.sqrt(2.0 * np.pi)
    mean = mu * cdf + sigma * pdf
    second = (mu * mu + sigma * sigma) * cdf + mu * sigma * pdf
    return float(mean), float(max(second - mean * mean, 0.0))


def _bn_unit_constant(B: float) -> float:
    return gamma_ratio((B - 1) / 2, (B - 2) / 2) / np.sqrt(B * np.pi)  # type: ignore[operator]


def bn_unit_pdf(z: ArrayLike, B: float) -> ArrayLike:
    """Density of a leave-one-out normalized Gaussian sample, batch size B >= 3."""
    _check_batch(B, 3, "bn_unit_pdf")
    z = np.asarray(z, dtype=np.float64)
    log_kernel = -(B - 1) / 2 * np.log1p(z * z / B)
    return _out(_bn_unit_constant(B) * np.exp(log_kernel))


def bn_unit_cdf(z: ArrayLike, B: float) -> ArrayLike:
    """CDF companion of bn_unit_pdf: t_{B-2}(z sqrt((B-2)/B))."""
    _check_batch(B, 3, "bn_unit_cdf")
    z = np.asarray(z, dtype=np.float64)
    return _out(stats.t.cdf(z * np.sqrt((B - 2) / B), df=B - 2))


def bn_relu_moments(B: float) -> Tuple[float, float]:
    """Mean and variance of relu(z) for the leave-one-out variable; B >= 5."""
    _check_batch(B, 5, "bn_relu_moments")
    mean = _bn_unit_constant(B) * B / (B - 3)
    var = B / (2 * (B - 4)) - mean * mean
    return float(mean), float(var)


def loo_var_expectation(sigma2: float, B: float) -> float:
    """E[sigma_loo^2] = sigma^2 (B-2)/(B-1)."""
    _check_batch(B, 2, "loo_var_expectation")
    return sigma2 * (B - 2) / (B - 1)


def loo_normalized_variance(B: float) -> float:
    """Var(z) = B / (B - 4) for the leave-one-out variable; B >= 5."""
    _check_batch(B, 5, "loo_normalized_variance")
    return B / (B - 4)


def _check_gamma(gamma: float) -> None:
    if not gamma >= 0:
        raise DomainError("gamma must be >= 0", argument="gamma", value=gamma)


def g0_pdf_from_gamma(g: ArrayLike, gamma: float) -> ArrayLike:
    """
    Density of the class-0 fraction for variance ratio ``gamma``.

    gamma = 0 is a point mass at 1/2: the result is inf there and 0 elsewhere.

    Raises:
        DomainError: g outside (0, 1) or gamma < 0
    """
    _check_gamma(gamma)
    z = np.asarray(std_normal_quantile(g), dtype=np.float64)
    if gamma == 0:
        return _out(np.where(np.asarray(g) == 0.5, np.inf, 0.0))
    return _out(np.exp(0.5 * z * z * (1.0 - 1.0 / gamma)) / np.sqrt(gamma))


def g0_cdf_from_gamma(g: ArrayLike, gamma: float) -> ArrayLike:
    """P(G0 <= g) = Phi(Phi^-1(g) / sqrt(gamma)); a step at 1/2 when gamma = 0."""
    _check_gamma(gamma)
    g = np.asarray(g, dtype=np.float64)
    if np.any((g < 0) | (g > 1)):
        raise DomainError("g must lie in [0, 1]", argument="g", value=g.tolist())
    if gamma == 0:
        return _out(np.where(g >= 0.5, 1.0, 0.0))
    with np.errstate(divide="ignore"):
        z = special.ndtri(g)
    return _out(special.ndtr(z / np.sqrt(gamma)))


def sample_g0(gamma: float, n: int, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Draw G0 = Phi(sqrt(gamma) Z) directly from centers, for checking the closed form."""
    _check_gamma(gamma)
    rng = rng or np.random.default_rng()
    return special.ndtr(np.sqrt(gamma) * rng.standard_normal(n))


__all__ = [
    "rectified_gaussian_moments",
    "bn_unit_pdf",
    "bn_unit_cdf",
    "bn_relu_moments",
    "loo_var_expectation",
    "loo_normalized_variance",
    "g0_pdf_from_gamma",
    "g0_cdf_from_gamma",
    "sample_g0",
]
