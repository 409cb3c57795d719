# app/trainer/backward.py
"""
Reverse-mode gradients of the mean softmax cross-entropy.

Gradients flow through the normalization statistics of the trace they are
given: batch statistics for Train and FullBatch traces, per-sample
statistics for LayerNorm/RMSNorm, and fixed running statistics for Eval.
"""

from typing import Tuple

import numpy as np
from scipy import special

from common.api_error import DomainError, ShapeMismatchError
from app.core import Batch, batch_norm_backward, batch_norm_loo_backward, forward
from app.core import layer_norm_backward, relu_backward
from app.schemas import (
    EstimatorKind,
    ForwardMode,
    ForwardTrace,
    Gradients,
    LayerTrace,
    Network,
    NormAxis,
    NormPlacement,
)


def _check_labels(labels: np.ndarray, outputs: np.ndarray) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.shape != (outputs.shape[0],):
        raise ShapeMismatchError(
            "one label per output row required", expected=(outputs.shape[0],), actual=labels.shape
        )
    if labels.size and (labels.min() < 0 or labels.max() >= outputs.shape[1]):
        raise DomainError(
            f"labels must lie in [0, {outputs.shape[1]})",
            argument="labels",
            value=int(labels.max()),
        )
    return labels.astype(np.int64)


def softmax_cross_entropy(outputs: np.ndarray, labels: np.ndarray) -> Tuple[float, np.ndarray]:
    """Mean cross-entropy and the softmax probabilities of every row."""
    labels = _check_labels(labels, outputs)
    log_probs = special.log_softmax(outputs, axis=1)
    loss = -float(np.mean(log_probs[np.arange(labels.size), labels]))
    return loss, np.exp(log_probs)


def loss_value(
    net: Network, batch: Batch, labels: np.ndarray, mode: ForwardMode = ForwardMode.TRAIN
) -> float:
    return softmax_cross_entropy(forward(net, batch, mode).outputs, labels)[0]


def _norm_input_grad(d_hat: np.ndarray, layer: LayerTrace) -> np.ndarray:
    stats = layer.stats
    assert stats is not None and layer.norm_hat is not None and layer.norm_input is not None
    if stats.axis == NormAxis.LAYER:
        return layer_norm_backward(d_hat, layer.norm_hat, stats)
    if stats.estimator == EstimatorKind.LEAVE_ONE_OUT:
        return batch_norm_loo_backward(d_hat, layer.norm_input, stats)
    return batch_norm_backward(d_hat, layer.norm_hat, stats)


def backward(net: Network, trace: ForwardTrace, labels: np.ndarray) -> Gradients:
    """
    Gradients for every weight, bias, norm scale and shift, plus the inputs.

    Raises:
        ShapeMismatchError: labels do not match the trace, or the trace does
            not belong to ``net``
    """
    if len(trace.layers) != net.config.depth:
        raise ShapeMismatchError(
            "trace depth does not match the network",
            expected=net.config.depth,
            actual=len(trace.layers),
        )
    loss, probs = softmax_cross_entropy(trace.outputs, labels)
    n = trace.outputs.shape[0]
    d_out = probs
    d_out[np.arange(n), np.asarray(labels, dtype=np.int64)] -= 1.0
    d_out /= n

    depth = net.config.depth
    d_weights: list = [None] * (depth + 1)
    d_biases: list = [None] * (depth + 1)
    d_scale: list = [None] * depth if net.config.has_norm else []
    d_shift: list = [None] * depth if net.config.has_norm else []

    d_weights[depth] = d_out.T @ trace.last_hidden
    d_biases[depth] = d_out.sum(axis=0)
    d_g = d_out @ net.weights[depth]

    for l in reversed(range(depth)):
        layer = trace.layers[l]
        h = layer.pre_activation
        if layer.placement == NormPlacement.ABSENT:
            d_h = relu_backward(d_g, h)
        else:
            assert layer.norm_output is not None and layer.norm_hat is not None
            if layer.placement == NormPlacement.PRE_ACTIVATION:
                d_norm_out = relu_backward(d_g, layer.norm_output)
            else:
                d_norm_out = d_g
            d_scale[l] = np.sum(d_norm_out * layer.norm_hat, axis=0)
            d_shift[l] = d_norm_out.sum(axis=0)
            d_in = _norm_input_grad(d_norm_out * net.norm_scale[l], layer)
            if layer.placement == NormPlacement.PRE_ACTIVATION:
                d_h = d_in
            else:
                d_h = relu_backward(d_in, h)
        g_prev = trace.layers[l - 1].post_activation if l > 0 else trace.inputs
        d_weights[l] = d_h.T @ g_prev
        d_biases[l] = d_h.sum(axis=0)
        d_g = d_h @ net.weights[l]

    return Gradients(
        loss=loss,
        weights=tuple(d_weights),
        biases=tuple(d_biases),
        norm_scale=tuple(d_scale),
        norm_shift=tuple(d_shift),
        inputs=d_g,
    )


__all__ = ["softmax_cross_entropy", "loss_value", "backward"]
