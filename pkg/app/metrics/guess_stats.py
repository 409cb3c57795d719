# app/metrics/guess_stats.py
import numpy as np

from common.api_error import EmptyBatchError
from app.core import Batch, forward, predict
from app.schemas import ForwardMode, GuessStats, Network


def guess_stats_from_predictions(predictions: np.ndarray, num_classes: int) -> GuessStats:
    predictions = np.asarray(predictions)
    if predictions.size == 0:
        raise EmptyBatchError()
    counts = np.bincount(predictions, minlength=num_classes)
    return GuessStats(counts=tuple(int(c) for c in counts))


def estimate_guess_stats(
    net: Network, data: Batch, mode: ForwardMode = ForwardMode.FULL_BATCH
) -> GuessStats:
    """Fractions of ``data`` assigned to each class (full-batch BN statistics by default)."""
    outputs = forward(net, data, mode).outputs
    return guess_stats_from_predictions(predict(outputs), net.config.num_classes)


__all__ = ["guess_stats_from_predictions", "estimate_guess_stats"]
