# app/core/network.py
"""
ReLU MLPs with configurable normalization placement.

Per hidden layer l:
    h = g_prev @ W.T + b
    pre-norm:   g = relu(alpha * N(h) + beta)
    post-norm:  g = alpha * N(relu(h)) + beta
    no norm:    g = relu(h)
The output layer is linear: O = g_L @ W_out.T + b_out.
"""

from typing import Optional, Sequence, Tuple, Union

import numpy as np

from common.api_error import (
    ConfigurationError,
    EmptyBatchError,
    NonFiniteError,
    ShapeMismatchError,
)
from app.schemas import (
    Dataset,
    EstimatorKind,
    ForwardMode,
    ForwardTrace,
    LayerTrace,
    Network,
    NetworkConfig,
    NormAxis,
    NormKind,
    NormPlacement,
    NormStats,
)
from app.data.batching import minibatch_indices
from .norm_ops import batch_norm, batch_norm_loo, layer_norm, relu

Batch = Union[np.ndarray, Dataset]


def init_network(config: NetworkConfig, seed: int) -> Network:
    """
    Kaiming-style initialization: W_ij ~ N(0, sigma_w^2 / fan_in) for every
    layer including the output; biases 0, norm scale 1, norm shift 0.
    """
    rng = np.random.default_rng(seed)
    widths = config.layer_widths
    weights = [
        rng.normal(0.0, np.sqrt(config.sigma_w2 / fan_in), size=(fan_out, fan_in))
        for fan_in, fan_out in zip(widths[:-1], widths[1:])
    ]
    biases = [np.zeros(fan_out) for fan_out in widths[1:]]
    hidden = config.hidden_widths if config.has_norm else ()
    return Network(
        config=config,
        weights=weights,
        biases=biases,
        norm_scale=[np.ones(n) for n in hidden],
        norm_shift=[np.zeros(n) for n in hidden],
    )


def mlp_a(
    norm_kind: NormKind = NormKind.NONE,
    placement: NormPlacement = NormPlacement.ABSENT,
    **overrides: object,
) -> NetworkConfig:
    """One hidden layer of 100 nodes on 1000 inputs, 2 classes."""
    fields: dict = dict(
        input_dim=1000,
        hidden_widths=(100,),
        num_classes=2,
        norm_kind=norm_kind,
        placement=placement,
    )
    fields.update(overrides)
    return NetworkConfig(**fields)


def mlp_b(
    norm_kind: NormKind = NormKind.NONE,
    placement: NormPlacement = NormPlacement.ABSENT,
    **overrides: object,
) -> NetworkConfig:
    """Twenty hidden layers of 100 nodes on 1000 inputs, 2 classes."""
    fields: dict = dict(
        input_dim=1000,
        hidden_widths=(100,) * 20,
        num_classes=2,
        norm_kind=norm_kind,
        placement=placement,
    )
    fields.update(overrides)
    return NetworkConfig(**fields)


def _as_inputs(net: Network, batch: Batch) -> np.ndarray:
    x = batch.inputs if isinstance(batch, Dataset) else np.asarray(batch, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeMismatchError("batch must be a 2-d matrix", expected="N x d", actual=x.shape)
    if x.shape[0] == 0:
        raise EmptyBatchError()
    if x.shape[1] != net.config.input_dim:
        raise ShapeMismatchError(
            "batch column count does not match input_dim",
            expected=net.config.input_dim,
            actual=x.shape[1],
        )
    if not np.isfinite(x).all():
        raise NonFiniteError("batch contains non-finite values", where="forward input")
    return x


def _normalize(
    values: np.ndarray, net: Network, layer: int, mode: ForwardMode
) -> Tuple[np.ndarray, NormStats]:
    config = net.config
    eps = config.epsilon
    if config.norm_kind == NormKind.LAYER:
        return layer_norm(values, eps, subtract_mean=True)
    if config.norm_kind == NormKind.RMS:
        return layer_norm(values, eps, subtract_mean=False)
    if mode == ForwardMode.TRAIN:
        return batch_norm_loo(values, eps) if config.loo_estimators else batch_norm(values, eps)
    if mode == ForwardMode.FULL_BATCH:
        return batch_norm(values, eps)
    if not net.has_running_stats:
        raise ConfigurationError(
            "Eval mode needs stored BN running statistics",
            violations=["network.running_mean: missing"],
        )
    mean = net.running_mean[layer]  # type: ignore[index]
    var = net.running_var[layer]  # type: ignore[index]
    denom = np.sqrt(var + eps)
    if np.any(denom == 0):
        raise ConfigurationError(
            "running variance is zero with epsilon = 0",
            violations=[f"network.running_var[{layer}]: zero entries"],
        )
    stats = NormStats(
        mean=mean,
        std=np.sqrt(var),
        denominator=denom,
        epsilon=eps,
        estimator=EstimatorKind.RUNNING,
        axis=NormAxis.BATCH,
        variance_convention="running",
    )
    return (values - mean) / denom, stats


def forward(net: Network, batch: Batch, mode: ForwardMode = ForwardMode.TRAIN) -> ForwardTrace:
    """
    Propagate a batch through the network.

    Raises:
        ShapeMismatchError: wrong column count, or a Train-mode mini-batch BN
            batch whose row count differs from bn_batch_size
        NonFiniteError: non-finite inputs or activations
        EmptyBatchError: no rows
        ConfigurationError: Eval mode on a BN network without running stats
    """
    x = _as_inputs(net, batch)
    config = net.config
    wrong_batch = config.uses_minibatch_bn and x.shape[0] != config.bn_batch_size
    if mode == ForwardMode.TRAIN and wrong_batch:
        raise ShapeMismatchError(
            "Train-mode mini-batch BN needs exactly bn_batch_size rows",
            expected=config.bn_batch_size,
            actual=x.shape[0],
        )

    layers = []
    g = x
    for l in range(config.depth):
        h = g @ net.weights[l].T + net.biases[l]
        if config.placement == NormPlacement.ABSENT:
            g = relu(h)
            layers.append(
                LayerTrace(pre_activation=h, post_activation=g, placement=config.placement)
            )
            continue
        norm_input = h if config.placement == NormPlacement.PRE_ACTIVATION else relu(h)
        hat, stats = _normalize(norm_input, net, l, mode)
        norm_output = net.norm_scale[l] * hat + net.norm_shift[l]
        g = relu(norm_output) if config.placement == NormPlacement.PRE_ACTIVATION else norm_output
        layers.append(
            LayerTrace(
                pre_activation=h,
                norm_input=norm_input,
                norm_hat=hat,
                norm_output=norm_output,
                stats=stats,
                post_activation=g,
                placement=config.placement,
            )
        )

    outputs = g @ net.weights[-1].T + net.biases[-1]
    if not np.isfinite(outputs).all():
        raise NonFiniteError("forward produced non-finite outputs", where="output layer")
    return ForwardTrace(mode=mode, inputs=x, layers=tuple(layers), outputs=outputs)


def predict(outputs: np.ndarray) -> np.ndarray:
    """Row-wise argmax; ties go to the lowest class index."""
    outputs = np.asarray(outputs)
    if outputs.ndim != 2 or outputs.shape[1] < 2:
        raise ShapeMismatchError(
            "outputs need at least 2 class columns", expected="N x N_C", actual=outputs.shape
        )
    if outputs.shape[0] == 0:
        raise EmptyBatchError()
    return np.argmax(outputs, axis=1)


def forward_minibatched(
    net: Network, data: Batch, seed: int, batch_size: Optional[int] = None
) -> Tuple[np.ndarray, np.ndarray, int]:
    """
    Train-mode forward over a whole dataset in shuffled contiguous blocks.

    Returns (outputs of kept rows, kept row indices, dropped row count). The
    final partial block is dropped.
    """
    x = _as_inputs(net, data)
    size = batch_size or net.config.bn_batch_size
    if size is None:
        raise ConfigurationError(
            "forward_minibatched needs a batch size",
            violations=["bn_batch_size: not set"],
        )
    blocks, dropped = minibatch_indices(x.shape[0], size, seed)
    if not blocks:
        raise EmptyBatchError(f"fewer rows ({x.shape[0]}) than one batch ({size})")
    outputs = [forward(net, x[idx], ForwardMode.TRAIN).outputs for idx in blocks]
    return np.concatenate(outputs, axis=0), np.concatenate(blocks), dropped


def permute_hidden(net: Network, layer: int, order: Sequence[int]) -> Network:
    """Relabel the nodes of hidden layer ``layer`` (0-based); outputs are unchanged."""
    order = np.asarray(order)
    weights = list(net.weights)
    biases = list(net.biases)
    weights[layer] = weights[layer][order]
    biases[layer] = biases[layer][order]
    weights[layer + 1] = weights[layer + 1][:, order]
    updates: dict = {"weights": weights, "biases": biases}
    if net.config.has_norm:
        scale, shift = list(net.norm_scale), list(net.norm_shift)
        scale[layer], shift[layer] = scale[layer][order], shift[layer][order]
        updates.update(norm_scale=scale, norm_shift=shift)
    if net.has_running_stats:
        rm, rv = list(net.running_mean), list(net.running_var)  # type: ignore[arg-type]
        rm[layer], rv[layer] = rm[layer][order], rv[layer][order]
        updates.update(running_mean=rm, running_var=rv)
    return net.with_parameters(**updates)


__all__ = [
    "Batch",
    "init_network",
    "mlp_a",
    "mlp_b",
    "forward",
    "predict",
    "forward_minibatched",
    "permute_hidden",
]
