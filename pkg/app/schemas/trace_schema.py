# app/schemas/trace_schema.py
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict

from .network_schema import ForwardMode, NormPlacement
from .norm_schema import NormStats


class LayerTrace(BaseModel):
    """
    Values of one hidden layer for a batch.

    pre_activation: dense output h.
    norm_input / norm_hat / norm_output: input to the normalizer, the
        standardized values and the values after scale/shift; None without norm.
    post_activation: g, the input of the next layer.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    pre_activation: np.ndarray
    norm_input: Optional[np.ndarray] = None
    norm_hat: Optional[np.ndarray] = None
    norm_output: Optional[np.ndarray] = None
    stats: Optional[NormStats] = None
    post_activation: np.ndarray
    placement: NormPlacement


class ForwardTrace(BaseModel):
    """Everything a forward pass computed; the output layer is purely linear."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    mode: ForwardMode
    inputs: np.ndarray
    layers: tuple[LayerTrace, ...]
    outputs: np.ndarray

    @property
    def last_hidden(self) -> np.ndarray:
        return self.layers[-1].post_activation if self.layers else self.inputs

    def layer_pre_activation(self, layer: int) -> np.ndarray:
        """h^(l) for l = 1..L+1; l = L+1 is the output."""
        if layer == len(self.layers) + 1:
            return self.outputs
        return self.layers[layer - 1].pre_activation


__all__ = ["LayerTrace", "ForwardTrace"]
