# app/core/norm_ops.py
"""
Normalization and activation primitives.

Standard BN:   x_hat = (x - mu) / sqrt(var + eps), biased variance (divide by B).
LOO BN:        sample a is normalized by the mean and spread of the other
               B - 1 samples, which makes it independent of its own normalizer
               for Gaussian columns. The residual variance is
               var_a = (1/(B-1)) sum_{b != a} x_b^2 - mu_a^2.
LayerNorm:     the same standardization along each row.
RMSNorm:       x / sqrt(mean(x^2) + eps), no mean subtraction.

All functions accept a single vector or a matrix whose columns (BN) or rows
(LN/RMS) are normalized independently. Scale and shift are left to callers.
"""

from typing import Tuple

import numpy as np

from common.api_error import DegenerateVarianceError, DomainError
from app.schemas import EstimatorKind, NormAxis, NormStats

# spreads below this fraction of the column scale count as zero
_DEGENERATE_RTOL = 16 * np.finfo(np.float64).eps


def _as_float(x: np.ndarray) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


def _check_degenerate(var: np.ndarray, scale2: np.ndarray, eps: float, where: str) -> np.ndarray:
    degenerate = var <= _DEGENERATE_RTOL * scale2
    if eps == 0.0 and np.any(degenerate):
        raise DegenerateVarianceError(
            f"{where}: zero variance with epsilon = 0", where=where
        )
    return degenerate


def batch_norm(x: np.ndarray, eps: float = 0.0) -> Tuple[np.ndarray, NormStats]:
    """
    Standardize each column over the batch axis (axis 0).

    Raises:
        DomainError: fewer than 2 rows
        DegenerateVarianceError: a constant column with eps = 0
    """
    x = _as_float(x)
    b = x.shape[0]
    if b < 2:
        raise DomainError("batch_norm needs at least 2 samples", argument="B", value=b)
    mean = x.mean(axis=0)
    centered = x - mean
    var = np.mean(centered**2, axis=0)
    constant = np.ptp(x, axis=0) == 0
    _check_degenerate(np.where(constant, 0.0, var), np.zeros_like(var), eps, "batch_norm")
    # exact zeros for constant columns
    var = np.where(constant, 0.0, var)
    centered = np.where(constant, 0.0, centered)
    denom = np.sqrt(var + eps)
    hat = centered / denom
    stats = NormStats(
        mean=mean,
        std=np.sqrt(var),
        denominator=denom,
        epsilon=eps,
        estimator=EstimatorKind.STANDARD,
        axis=NormAxis.BATCH,
        variance_convention="biased",
    )
    return hat, stats


def batch_norm_loo(x: np.ndarray, eps: float = 0.0) -> Tuple[np.ndarray, NormStats]:
    """
    Leave-one-out batch normalization over axis 0.

    Statistics are per sample: ``stats.mean`` and ``stats.std`` have the
    shape of ``x``.

    Raises:
        DomainError: fewer than 3 rows
        DegenerateVarianceError: a zero residual variance with eps = 0
    """
    x = _as_float(x)
    b = x.shape[0]
    if b < 3:
        raise DomainError(
            "leave-one-out batch_norm needs at least 3 samples", argument="B", value=b
        )
    center = x.mean(axis=0)
    # shift-invariant, so work on centered values for accuracy
    y = x - center
    sum_y = y.sum(axis=0)
    sum_y2 = np.sum(y**2, axis=0)
    mu_y = (sum_y - y) / (b - 1)
    var = (sum_y2 - y**2) / (b - 1) - mu_y**2
    var = np.maximum(var, 0.0)
    scale2 = np.broadcast_to(sum_y2 / b, var.shape)
    degenerate = _check_degenerate(var, scale2, eps, "batch_norm_loo")
    # only reached with eps > 0
    var = np.where(degenerate, 0.0, var)
    resid = y - mu_y
    denom = np.sqrt(var + eps)
    hat = resid / denom
    stats = NormStats(
        mean=center + mu_y,
        std=np.sqrt(var),
        denominator=denom,
        epsilon=eps,
        estimator=EstimatorKind.LEAVE_ONE_OUT,
        axis=NormAxis.BATCH,
        variance_convention="loo_b_minus_1",
    )
    return hat, stats


def layer_norm(
    x: np.ndarray, eps: float = 0.0, subtract_mean: bool = True
) -> Tuple[np.ndarray, NormStats]:
    """
    Normalize each row (last axis). ``subtract_mean=False`` gives RMSNorm.

    Raises:
        DomainError: rows shorter than 2 (1 for RMSNorm)
        DegenerateVarianceError: zero spread with eps = 0
    """
    x = _as_float(x)
    squeeze = x.ndim == 1
    rows = np.atleast_2d(x)
    n = rows.shape[1]
    if n < (2 if subtract_mean else 1):
        raise DomainError("layer_norm row too short", argument="n", value=n)
    if subtract_mean:
        mean = rows.mean(axis=1, keepdims=True)
        centered = rows - mean
        var = np.mean(centered**2, axis=1, keepdims=True)
        constant = np.ptp(rows, axis=1, keepdims=True) == 0
        _check_degenerate(np.where(constant, 0.0, var), np.zeros_like(var), eps, "layer_norm")
        var = np.where(constant, 0.0, var)
        centered = np.where(constant, 0.0, centered)
    else:
        mean = np.zeros((rows.shape[0], 1))
        centered = rows
        var = np.mean(rows**2, axis=1, keepdims=True)
        _check_degenerate(var, np.zeros_like(var), eps, "rms_norm")
    denom = np.sqrt(var + eps)
    hat = centered / denom
    stats = NormStats(
        mean=mean,
        std=np.sqrt(var),
        denominator=denom,
        epsilon=eps,
        estimator=EstimatorKind.STANDARD,
        axis=NormAxis.LAYER,
        subtract_mean=subtract_mean,
        variance_convention="biased",
    )
    return (hat[0] if squeeze else hat), stats


def rms_norm(x: np.ndarray, eps: float = 0.0) -> Tuple[np.ndarray, NormStats]:
    return layer_norm(x, eps, subtract_mean=False)


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(_as_float(x), 0.0)


def relu_backward(d_out: np.ndarray, pre: np.ndarray) -> np.ndarray:
    # subgradient 0 at the kink
    return d_out * (pre > 0)


def batch_norm_backward(d_hat: np.ndarray, hat: np.ndarray, stats: NormStats) -> np.ndarray:
    """Gradient w.r.t. the BN input given the gradient w.r.t. x_hat."""
    if stats.estimator == EstimatorKind.RUNNING:
        return d_hat / stats.denominator
    mean_d = d_hat.mean(axis=0)
    mean_dh = np.mean(d_hat * hat, axis=0)
    return (d_hat - mean_d - hat * mean_dh) / stats.denominator


def batch_norm_loo_backward(d_hat: np.ndarray, x: np.ndarray, stats: NormStats) -> np.ndarray:
    """
    Gradient through leave-one-out statistics.

    With A_a = g_a / s_a and C_a = g_a r_a / s_a^3 (r_a = x_a - mu_a):
    dx_c = A_c - (sum A - A_c)/(B-1)
           - [x_c (sum C - C_c) - (sum C mu - C_c mu_c)] / (B-1)
    """
    x = _as_float(x)
    b = x.shape[0]
    center = x.mean(axis=0)
    y = x - center
    mu_y = stats.mean - center
    s = stats.denominator
    resid = y - mu_y
    a = d_hat / s
    c = d_hat * resid / s**3
    sum_a = a.sum(axis=0)
    sum_c = c.sum(axis=0)
    sum_cmu = np.sum(c * mu_y, axis=0)
    return (
        a
        - (sum_a - a) / (b - 1)
        - (y * (sum_c - c) - (sum_cmu - c * mu_y)) / (b - 1)
    )


def layer_norm_backward(d_hat: np.ndarray, hat: np.ndarray, stats: NormStats) -> np.ndarray:
    """Row-wise gradient for LayerNorm or RMSNorm (per ``stats.subtract_mean``)."""
    mean_dh = np.mean(d_hat * hat, axis=-1, keepdims=True)
    if stats.subtract_mean:
        mean_d = d_hat.mean(axis=-1, keepdims=True)
        return (d_hat - mean_d - hat * mean_dh) / stats.denominator
    return (d_hat - hat * mean_dh) / stats.denominator


def estimator_gap(columns: np.ndarray) -> Tuple[float, float]:
    """
    Mean and variance over all entries of mu_standard - mu_loo_a.

    The gap equals (x_a - mu_loo_a) / B, so its variance falls like 1/B^2.
    """
    x = _as_float(columns)
    b = x.shape[0]
    if b < 3:
        raise DomainError("estimator_gap needs at least 3 samples", argument="B", value=b)
    mu_loo = (x.sum(axis=0) - x) / (b - 1)
    gap = x.mean(axis=0) - mu_loo
    return float(gap.mean()), float(gap.var())


__all__ = [
    "batch_norm",
    "batch_norm_loo",
    "layer_norm",
    "rms_norm",
    "relu",
    "relu_backward",
    "batch_norm_backward",
    "batch_norm_loo_backward",
    "layer_norm_backward",
    "estimator_gap",
]
