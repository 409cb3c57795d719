# app/trainer/sgd.py
"""
Plain mini-batch SGD on softmax cross-entropy.

BN running statistics start from the full-batch statistics of the training
set, so the t = 0 evaluation sees the same network as a static ensemble,
and then follow an exponential moving average of the mini-batch statistics.
"""

from typing import Iterator, List, Optional, Tuple

import numpy as np

from common.api_error import ConfigurationError, DivergenceError, NonFiniteError, ShapeMismatchError
from common.logger import get_app_logger
from app.core import forward, predict
from app.schemas import (
    Dataset,
    EvalRecord,
    ForwardMode,
    Network,
    NormKind,
    TrainConfig,
    TrainTrajectory,
)
from .backward import backward, softmax_cross_entropy
from .trajectory import relabel_dominant

logger = get_app_logger("igb.trainer")

# mixed into the training seed so shuffling never shares a stream with init
TRAIN_STREAM = 0x5D6


def calibrate_running_stats(net: Network, data: Dataset) -> Network:
    """Running mean/var of every BN layer set to its full-batch statistics on ``data``."""
    if net.config.norm_kind != NormKind.BATCH:
        return net
    trace = forward(net, data, ForwardMode.FULL_BATCH)
    means = [layer.norm_input.mean(axis=0) for layer in trace.layers]  # type: ignore[union-attr]
    variances = [layer.norm_input.var(axis=0) for layer in trace.layers]  # type: ignore[union-attr]
    return net.with_parameters(running_mean=means, running_var=variances)


def _batches(n: int, batch_size: int, rng: np.random.Generator) -> Iterator[np.ndarray]:
    # a fresh permutation per epoch; the last partial block of an epoch is skipped
    full = n // batch_size
    while True:
        order = rng.permutation(n)
        for i in range(full):
            yield order[i * batch_size : (i + 1) * batch_size]


def _class_accuracy(
    predictions: np.ndarray, labels: np.ndarray, num_classes: int
) -> Tuple[float, ...]:
    totals = np.bincount(labels, minlength=num_classes)
    hits = np.bincount(labels[predictions == labels], minlength=num_classes)
    # classes absent from the evaluation set score 0
    return tuple(float(h / t) if t else 0.0 for h, t in zip(hits, totals))


def evaluate(net: Network, step: int, train: Dataset, test: Optional[Dataset] = None) -> EvalRecord:
    """Eval-mode loss, accuracies and guess fractions on the full train (and test) set."""
    num_classes = net.config.num_classes
    outputs = forward(net, train, ForwardMode.EVAL).outputs
    loss, _ = softmax_cross_entropy(outputs, train.labels)
    predictions = predict(outputs)
    counts = np.bincount(predictions, minlength=num_classes)
    record = dict(
        step=step,
        loss=loss,
        train_accuracy=int(np.sum(predictions == train.labels)) / train.n,
        train_class_accuracy=_class_accuracy(predictions, train.labels, num_classes),
        guess_fractions=tuple(int(c) / train.n for c in counts),
    )
    if test is not None:
        test_predictions = predict(forward(net, test, ForwardMode.EVAL).outputs)
        record.update(
            test_accuracy=int(np.sum(test_predictions == test.labels)) / test.n,
            test_class_accuracy=_class_accuracy(test_predictions, test.labels, num_classes),
        )
    return EvalRecord(**record)


def _check_training_setup(net: Network, data: Dataset, cfg: TrainConfig) -> None:
    config = net.config
    if data.dim != config.input_dim:
        raise ShapeMismatchError(
            "training data does not match input_dim", expected=config.input_dim, actual=data.dim
        )
    if int(data.labels.max()) >= config.num_classes:
        raise ShapeMismatchError(
            "labels exceed the network's class count",
            expected=config.num_classes,
            actual=int(data.labels.max()) + 1,
        )
    if cfg.batch_size > data.n:
        raise ConfigurationError(
            "batch_size exceeds the training set",
            violations=[f"train.batch_size: {cfg.batch_size} > {data.n} rows"],
        )
    if config.norm_kind == NormKind.BATCH:
        minimum = 3 if config.loo_estimators else 2
        if cfg.batch_size < minimum:
            raise ConfigurationError(
                "batch normalization needs larger training batches",
                violations=[f"train.batch_size: must be >= {minimum} with batch norm"],
            )
        if config.bn_batch_size is not None and config.bn_batch_size != cfg.batch_size:
            raise ConfigurationError(
                "network bn_batch_size differs from the training batch size",
                violations=[
                    f"network.bn_batch_size: {config.bn_batch_size} "
                    f"!= train.batch_size {cfg.batch_size}"
                ],
            )


def _sgd_step(net: Network, x: np.ndarray, y: np.ndarray, step: int, cfg: TrainConfig) -> Network:
    try:
        trace = forward(net, x, ForwardMode.TRAIN)
    except NonFiniteError as exc:
        raise DivergenceError(step, float("nan")) from exc
    grads = backward(net, trace, y)
    if not np.isfinite(grads.loss):
        raise DivergenceError(step, grads.loss)

    lr = cfg.learning_rate
    updates: dict = {
        "weights": [w - lr * dw for w, dw in zip(net.weights, grads.weights)],
        "biases": [b - lr * db for b, db in zip(net.biases, grads.biases)],
    }
    if net.config.has_norm:
        updates["norm_scale"] = [a - lr * da for a, da in zip(net.norm_scale, grads.norm_scale)]
        updates["norm_shift"] = [b - lr * db for b, db in zip(net.norm_shift, grads.norm_shift)]
    if net.has_running_stats:
        m = cfg.bn_momentum
        updates["running_mean"] = [
            m * old + (1 - m) * layer.norm_input.mean(axis=0)  # type: ignore[union-attr]
            for old, layer in zip(net.running_mean, trace.layers)  # type: ignore[arg-type]
        ]
        updates["running_var"] = [
            m * old + (1 - m) * layer.norm_input.var(axis=0)  # type: ignore[union-attr]
            for old, layer in zip(net.running_var, trace.layers)  # type: ignore[arg-type]
        ]
    return net.with_parameters(**updates)


def fit(
    net: Network, data: Dataset, cfg: TrainConfig, test: Optional[Dataset] = None
) -> Tuple[Network, TrainTrajectory]:
    """
    Train ``net`` on ``data`` and return the final network with its trajectory.

    Evaluations happen at step 0, every ``eval_cadence`` steps and after the
    last step. Deterministic for fixed network, data and ``cfg.seed``.

    Raises:
        DivergenceError: non-finite loss or activations, with the step index
        ShapeMismatchError: data or labels do not fit the network
        ConfigurationError: batch size incompatible with data or BN settings
    """
    _check_training_setup(net, data, cfg)
    rng = np.random.default_rng([TRAIN_STREAM, cfg.seed])
    batches = _batches(data.n, cfg.batch_size, rng)
    net = calibrate_running_stats(net, data)

    logger.info(
        "training started",
        network=net.config.label(),
        steps=cfg.steps,
        learning_rate=cfg.learning_rate,
        batch_size=cfg.batch_size,
        seed=cfg.seed,
    )
    records: List[EvalRecord] = []
    for step in range(cfg.steps + 1):
        if step % cfg.eval_cadence == 0 or step == cfg.steps:
            record = evaluate(net, step, data, test)
            records.append(record)
            logger.debug(
                "eval",
                step=step,
                loss=record.loss,
                accuracy=record.train_accuracy,
                max_guess=record.max_guess_fraction,
            )
        if step == cfg.steps:
            break
        idx = next(batches)
        net = _sgd_step(net, data.inputs[idx], data.labels[idx], step, cfg)

    num_classes = net.config.num_classes
    priors = tuple(float(c) / data.n for c in np.bincount(data.labels, minlength=num_classes))
    test_priors = None
    if test is not None:
        test_counts = np.bincount(test.labels, minlength=num_classes)
        test_priors = tuple(float(c) / test.n for c in test_counts)
    trajectory = TrainTrajectory(
        records=tuple(records),
        class_priors=priors,
        test_class_priors=test_priors,
        permutation=tuple(range(num_classes)),
        seed=cfg.seed,
    )
    if cfg.relabel_dominant:
        trajectory = relabel_dominant(trajectory)
    logger.info(
        "training finished",
        network=net.config.label(),
        final_accuracy=records[-1].train_accuracy,
        final_loss=records[-1].loss,
    )
    return net, trajectory


def train(
    net: Network, data: Dataset, cfg: TrainConfig, test: Optional[Dataset] = None
) -> TrainTrajectory:
    return fit(net, data, cfg, test)[1]


__all__ = ["TRAIN_STREAM", "calibrate_running_stats", "evaluate", "fit", "train"]
