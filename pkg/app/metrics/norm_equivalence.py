# app/metrics/norm_equivalence.py
import numpy as np

from app.core import Batch, forward, layer_norm
from app.schemas import ForwardMode, Network, NormEquivalenceReport


def ln_rms_gap(net: Network, data: Batch) -> NormEquivalenceReport:
    """
    Apply LayerNorm and RMSNorm to the same hidden pre-activations and
    report, per layer, the largest elementwise difference and the largest
    per-sample layer mean. The two agree when the layer mean vanishes.
    """
    trace = forward(net, data, ForwardMode.FULL_BATCH)
    eps = net.config.epsilon
    differences, layer_means = [], []
    for layer in trace.layers:
        h = layer.pre_activation
        ln, _ = layer_norm(h, eps, subtract_mean=True)
        rms, _ = layer_norm(h, eps, subtract_mean=False)
        differences.append(float(np.max(np.abs(ln - rms))))
        layer_means.append(float(np.max(np.abs(h.mean(axis=1)))))
    return NormEquivalenceReport(
        max_abs_difference=tuple(differences), max_abs_layer_mean=tuple(layer_means)
    )


__all__ = ["ln_rms_gap"]
