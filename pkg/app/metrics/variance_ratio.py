# app/metrics/variance_ratio.py
"""
Variance ratio gamma = Var_W(<node>) / E_W[Var_D(node)].

<node> is the dataset mean of a node's pre-activation, Var_D its dataset
variance. Var_W pools all nodes of a layer across runs; the per-node
estimate (variance across runs per node, then averaged) is reported
alongside. Standard errors come from a leave-one-run-out jackknife.
"""

from typing import List, Sequence, Tuple, Union

import numpy as np

from common.api_error import DegenerateVarianceError, DomainError
from common.logger import get_app_logger
from common.scripts import map_ordered
from app.core import forward, init_network
from app.schemas import (
    DataSpec,
    EnsembleResult,
    ForwardMode,
    LayerGammaEstimate,
    NetworkConfig,
    VarianceRatioReport,
)
from .ensemble import dataset_provider, run_seeds

logger = get_app_logger("igb.metrics.variance_ratio")

MIN_GAMMA_RUNS = 10


def pooled_gamma(means: np.ndarray, variances: np.ndarray, layer: int = 1) -> LayerGammaEstimate:
    """
    Gamma from per-run node statistics, both shaped (runs, nodes).

    Raises:
        DegenerateVarianceError: zero mean dataset variance
    """
    means = np.asarray(means, dtype=np.float64)
    variances = np.asarray(variances, dtype=np.float64)
    runs, nodes = means.shape
    if runs < 2:
        raise DomainError("gamma needs at least 2 runs", argument="n_runs", value=runs)
    var_d = float(variances.mean())
    if not var_d > 0:
        raise DegenerateVarianceError(
            f"layer {layer}: zero dataset variance", where=f"layer {layer}"
        )
    var_w = float(np.var(means, ddof=1))
    gamma = var_w / var_d

    # leave-one-run-out sums
    centered = means - means.mean()
    s1 = centered.sum(axis=1)
    s2 = np.sum(centered**2, axis=1)
    m = (runs - 1) * nodes
    loo_mean = (s1.sum() - s1) / m
    loo_var_w = (s2.sum() - s2 - m * loo_mean**2) / (m - 1) if m > 1 else np.zeros(runs)
    loo_var_d = (variances.sum() - variances.sum(axis=1)) / m
    loo_gamma = loo_var_w / loo_var_d
    se = float(np.sqrt((runs - 1) / runs * np.sum((loo_gamma - loo_gamma.mean()) ** 2)))

    per_node = float(np.var(means, axis=0, ddof=1).mean()) / var_d
    return LayerGammaEstimate(
        layer=layer,
        gamma=gamma,
        gamma_se=se,
        var_w=var_w,
        var_d=var_d,
        gamma_per_node=per_node,
        n_runs=runs,
        n_nodes=nodes,
    )


def output_gamma(result: EnsembleResult) -> LayerGammaEstimate:
    """Output-layer gamma from the node statistics an ensemble already holds."""
    layer = len(result.config_snapshot["hidden_widths"]) + 1
    return pooled_gamma(result.output_means, result.output_vars, layer=layer)


def _resolve_layers(
    config: NetworkConfig, layer: Union[None, int, Sequence[int]]
) -> Tuple[int, ...]:
    last = config.depth + 1
    if layer is None:
        layers: Tuple[int, ...] = tuple(range(1, last + 1))
    elif isinstance(layer, int):
        layers = (layer,)
    else:
        layers = tuple(layer)
    bad = [l for l in layers if not 1 <= l <= last]
    if bad:
        raise DomainError(f"layers must lie in 1..{last}", argument="layer", value=bad)
    return layers


def estimate_gamma(
    config: NetworkConfig,
    data_spec: DataSpec,
    n_runs: int,
    layer: Union[None, int, Sequence[int]] = None,
    base_seed: int = 0,
    threads: int = 1,
) -> VarianceRatioReport:
    """
    Layer-wise gamma over ``n_runs`` initializations (layers 1..L+1, L+1 the
    output; all of them when ``layer`` is None). BN uses full-batch statistics.

    Raises:
        DomainError: fewer than 10 runs or a layer out of range
        DegenerateVarianceError: a layer with zero dataset variance
    """
    if n_runs < MIN_GAMMA_RUNS:
        raise DomainError(
            f"gamma estimation needs at least {MIN_GAMMA_RUNS} runs",
            argument="n_runs",
            value=n_runs,
        )
    layers = _resolve_layers(config, layer)
    seeds = run_seeds(n_runs, base_seed)
    data_for = dataset_provider(data_spec, config)

    def run(seed: int) -> Tuple[int, List[Tuple[np.ndarray, np.ndarray]]]:
        data = data_for(seed)
        trace = forward(init_network(config, seed), data, ForwardMode.FULL_BATCH)
        stats = []
        for l in layers:
            h = trace.layer_pre_activation(l)
            stats.append((h.mean(axis=0), h.var(axis=0)))
        return data.n, stats

    logger.info("gamma estimation started", network=config.label(), runs=n_runs, layers=len(layers))
    outcomes = map_ordered(run, seeds, threads)
    estimates = []
    for i, l in enumerate(layers):
        means = np.stack([o[1][i][0] for o in outcomes])
        variances = np.stack([o[1][i][1] for o in outcomes])
        estimates.append(pooled_gamma(means, variances, layer=l))
    logger.info(
        "gamma estimation finished",
        network=config.label(),
        output_gamma=estimates[-1].gamma,
    )
    return VarianceRatioReport(
        layers=tuple(estimates),
        n_runs=n_runs,
        n_samples=outcomes[0][0],
        seeds=seeds,
        config_snapshot=config.model_dump(mode="json"),
    )


def gamma_vs_shift(
    config: NetworkConfig,
    data_spec: DataSpec,
    shifts: Sequence[float],
    n_runs: int,
    base_seed: int = 0,
    threads: int = 1,
) -> List[Tuple[float, LayerGammaEstimate]]:
    """Output-layer gamma after adding each constant in ``shifts`` to every input."""
    results = []
    for c in shifts:
        spec = data_spec.model_copy(update={"shift": data_spec.shift + c})
        report = estimate_gamma(config, spec, n_runs, config.depth + 1, base_seed, threads)
        results.append((float(c), report.layers[0]))
    return results


__all__ = [
    "MIN_GAMMA_RUNS",
    "pooled_gamma",
    "output_gamma",
    "estimate_gamma",
    "gamma_vs_shift",
]
