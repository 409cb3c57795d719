# app/theory/prediction.py
"""
Variance-ratio predictions for untrained ReLU MLPs.

For an output node O = sum_j W_j g_j with W_j ~ N(0, sigma_w^2 / n), the
center over the weight ensemble has variance sigma_w^2 <g>^2 and the spread
over the data is sigma_w^2 Var(g), so gamma = <g>^2 / Var(g) and sigma_w^2
cancels. Normalizing after the ReLU forces <g> = 0 and gamma = 0.
"""

import math
from typing import Iterable, List, Optional

from common.api_error import DomainError
from app.schemas import (
    GammaSource,
    GaussianParams,
    NetworkConfig,
    NormKind,
    NormPlacement,
    PointMass,
    Regime,
    TheoryPrediction,
    TheoryRow,
)
from .densities import (
    bn_relu_moments,
    loo_normalized_variance,
    loo_var_expectation,
    rectified_gaussian_moments,
)

# rectified standard normal: <g>^2 / Var(g) = 1 / (pi - 1)
FULL_BATCH_GAMMA = 1.0 / (math.pi - 1.0)


def regime_from_gamma(gamma: float) -> Regime:
    """0 -> neutral, (0, 1] -> unimodal p(G0), > 1 -> mass piles up at 0 and 1."""
    if gamma < 0:
        raise DomainError("gamma must be >= 0", argument="gamma", value=gamma)
    if gamma == 0:
        return Regime.NEUTRAL
    return Regime.WEAK_PREJUDICE if gamma <= 1 else Regime.DEEP_PREJUDICE


def _from_moments(
    mean: float, var: float, sigma_w2: float, source: GammaSource, note: str
) -> TheoryPrediction:
    gamma = mean * mean / var
    return TheoryPrediction(
        regime=regime_from_gamma(gamma),
        gamma=gamma,
        gamma_source=source,
        output_dist=GaussianParams(mean=0.0, variance=sigma_w2 * var),
        center_dist=GaussianParams(mean=0.0, variance=sigma_w2 * mean * mean),
        activation_mean=mean,
        activation_variance=var,
        note=note,
    )


def _bn_pre_moments(batch_size: Optional[int]) -> tuple[float, float, GammaSource]:
    if batch_size is None:
        mean, var = rectified_gaussian_moments(0.0, 1.0)
        return mean, var, GammaSource.FULL_BATCH_BN
    if batch_size < 5:
        raise DomainError(
            "unsupported configuration: pre-activation BN theory needs bn_batch_size >= 5",
            argument="bn_batch_size",
            value=batch_size,
        )
    mean, var = bn_relu_moments(batch_size)
    return mean, var, GammaSource.MINI_BATCH_BN


def gamma_prediction(config: NetworkConfig) -> TheoryPrediction:
    """
    Predicted regime and gamma of the output layer, assuming i.i.d.
    zero-mean unit-variance inputs.

    Raises:
        DomainError: pre-activation mini-batch BN with bn_batch_size < 5
    """
    kind, placement = config.norm_kind, config.placement

    if placement == NormPlacement.POST_ACTIVATION and kind in (NormKind.BATCH, NormKind.LAYER):
        return TheoryPrediction(
            regime=Regime.NEUTRAL,
            gamma=0.0,
            gamma_source=GammaSource.CLOSED_FORM,
            output_dist=GaussianParams(mean=0.0, variance=config.sigma_w2),
            center_dist=PointMass(location=0.0),
            activation_mean=0.0,
            activation_variance=1.0,
            note="normalization after the ReLU recenters every node",
        )

    if kind == NormKind.BATCH:
        mean, var, source = _bn_pre_moments(config.bn_batch_size)
        return _from_moments(
            mean, var, config.sigma_w2, source, "depth independent: BN resets every layer"
        )

    if config.depth > 1:
        return TheoryPrediction(
            regime=None,
            gamma=None,
            gamma_source=GammaSource.NO_NORM_EMPIRICAL,
            note=(
                "equal to the unnormalized ReLU MLP at the same depth; "
                "estimate it with estimate_gamma on the no-norm configuration"
            ),
        )

    # one hidden layer: h ~ N(0, sigma_w^2) per node
    if kind == NormKind.NONE:
        mean, var = rectified_gaussian_moments(0.0, math.sqrt(config.sigma_w2))
        note = "one hidden layer without normalization"
    elif placement == NormPlacement.PRE_ACTIVATION:
        mean, var = rectified_gaussian_moments(0.0, 1.0)
        note = "one hidden layer, per-sample normalization before the ReLU"
    else:
        # RMS after the ReLU rescales relu(h) by sqrt(2 / sigma_w^2) without centering
        mean, var = rectified_gaussian_moments(0.0, math.sqrt(2.0))
        note = "one hidden layer, RMSNorm after the ReLU keeps the positive mean"
    return _from_moments(mean, var, config.sigma_w2, GammaSource.CLOSED_FORM, note)


def theory_table(batch_sizes: Iterable[int]) -> List[TheoryRow]:
    """Pre-activation BN moments and gamma per batch size, plus the full-batch limit last."""
    rows: List[TheoryRow] = []
    for b in sorted(set(batch_sizes)):
        mean, var = bn_relu_moments(b)
        rows.append(
            TheoryRow(
                batch_size=b,
                activation_mean=mean,
                activation_variance=var,
                gamma=mean * mean / var,
                loo_sigma2_expectation=loo_var_expectation(1.0, b),
                loo_normalized_variance=loo_normalized_variance(b),
            )
        )
    mean, var = rectified_gaussian_moments(0.0, 1.0)
    rows.append(
        TheoryRow(
            batch_size=None,
            activation_mean=mean,
            activation_variance=var,
            gamma=mean * mean / var,
            loo_sigma2_expectation=1.0,
            loo_normalized_variance=1.0,
        )
    )
    return rows


__all__ = [
    "FULL_BATCH_GAMMA",
    "regime_from_gamma",
    "gamma_prediction",
    "theory_table",
]
