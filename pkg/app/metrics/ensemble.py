# app/metrics/ensemble.py
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from common.api_error import DomainError
from common.logger import get_app_logger
from common.scripts import map_ordered
from app.core import forward, forward_minibatched, init_network, predict
from app.data import build_dataset
from app.schemas import (
    DataSpec,
    Dataset,
    EnsembleResult,
    ForwardMode,
    GuessStats,
    Histogram,
    NetworkConfig,
)
from .guess_stats import guess_stats_from_predictions

logger = get_app_logger("igb.metrics.ensemble")

RunOutcome = Tuple[GuessStats, np.ndarray, np.ndarray]


def run_seeds(n_runs: int, base_seed: int) -> Tuple[int, ...]:
    """Seeds base_seed + run index."""
    return tuple(base_seed + i for i in range(n_runs))


def dataset_provider(
    data_spec: DataSpec, config: NetworkConfig
) -> Callable[[int], Dataset]:
    """Per-seed data: a fresh draw when ``fresh_per_run`` is set, else one shared dataset."""
    if data_spec.fresh_per_run:
        return lambda seed: build_dataset(data_spec, seed=seed, input_dim=config.input_dim)
    shared = build_dataset(data_spec, input_dim=config.input_dim)
    return lambda seed: shared


def histogram(samples: Sequence[float], bins: int = 40) -> Histogram:
    counts, edges = np.histogram(np.asarray(samples, dtype=np.float64), bins=bins, range=(0.0, 1.0))
    return Histogram(edges=tuple(float(e) for e in edges), counts=tuple(int(c) for c in counts))


def ensemble_g0(
    config: NetworkConfig,
    data_spec: DataSpec,
    n_runs: int,
    base_seed: int = 0,
    threads: int = 1,
    bins: int = 40,
    seeds: Optional[Sequence[int]] = None,
) -> EnsembleResult:
    """
    G0 over independent initializations. BN statistics are full batch, or
    shuffled mini-batches of ``bn_batch_size`` (partial block dropped) when it is set.

    Each run also records the dataset mean and variance of every output
    node, so the same ensemble yields an output-layer gamma.

    Raises:
        DomainError: fewer than 2 runs
    """
    seeds = tuple(seeds) if seeds is not None else run_seeds(n_runs, base_seed)
    if len(seeds) < 2:
        raise DomainError("an ensemble needs at least 2 runs", argument="n_runs", value=len(seeds))
    data_for = dataset_provider(data_spec, config)

    def run(seed: int) -> RunOutcome:
        net = init_network(config, seed)
        if config.uses_minibatch_bn:
            outputs, _, _ = forward_minibatched(net, data_for(seed), seed)
        else:
            outputs = forward(net, data_for(seed), ForwardMode.FULL_BATCH).outputs
        stats = guess_stats_from_predictions(predict(outputs), config.num_classes)
        logger.debug("ensemble run", seed=seed, g0=stats.g0)
        return stats, outputs.mean(axis=0), outputs.var(axis=0)

    logger.info("ensemble started", network=config.label(), runs=len(seeds), threads=threads)
    outcomes = map_ordered(run, seeds, threads)
    stats = tuple(o[0] for o in outcomes)
    samples = tuple(s.g0 for s in stats)
    result = EnsembleResult(
        seeds=seeds,
        samples=samples,
        top_fractions=tuple(s.top_fraction for s in stats),
        guess_stats=stats,
        histogram=histogram(samples, bins),
        output_means=np.stack([o[1] for o in outcomes]),
        output_vars=np.stack([o[2] for o in outcomes]),
        config_snapshot=config.model_dump(mode="json"),
        metadata={
            "bn_statistics": "mini_batch" if config.uses_minibatch_bn else "full_batch",
            "bn_batch_size": config.bn_batch_size,
            "fresh_data_per_run": data_spec.fresh_per_run,
            "tie_rule": "lowest_index",
        },
    )
    logger.info(
        "ensemble finished",
        network=config.label(),
        g0_mean=float(np.mean(samples)),
        g0_std=float(np.std(samples)),
    )
    return result


__all__ = ["run_seeds", "dataset_provider", "histogram", "ensemble_g0"]
