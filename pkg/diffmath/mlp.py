import logging
from collections.abc import Sequence
from enum import Enum

import numpy as np

from utils.exceptions import ConfigurationError

from .tensor import Tensor, relu, sigmoid

logger = logging.getLogger(__name__)


class Activation(str, Enum):
    RELU = "relu"
    LINEAR = "linear"
    SIGMOID = "sigmoid"


class MlpParams:
    """
    Weights and biases of one multilayer perceptron.

    Layer l maps d_l -> d_{l+1} with weight shape (d_l, d_{l+1}); hidden layers use
    ReLU, the last layer is linear or sigmoid.
    """

    def __init__(
        self,
        layer_dims: Sequence[int],
        weights: Sequence[Tensor],
        biases: Sequence[Tensor],
        hidden_activation: Activation = Activation.RELU,
        output_activation: Activation = Activation.LINEAR,
    ):
        self.layer_dims = [int(d) for d in layer_dims]
        self.weights = list(weights)
        self.biases = list(biases)
        self.hidden_activation = Activation(hidden_activation)
        self.output_activation = Activation(output_activation)

        if len(self.layer_dims) < 2 or any(d < 1 for d in self.layer_dims):
            raise ConfigurationError(f"invalid layer dims {self.layer_dims}")
        if self.hidden_activation is not Activation.RELU:
            raise ConfigurationError("hidden activation must be relu")
        if self.output_activation is Activation.RELU:
            raise ConfigurationError("output activation must be linear or sigmoid")
        if len(self.weights) != len(self.layer_dims) - 1 or len(self.biases) != len(self.weights):
            raise ConfigurationError("one weight matrix and one bias vector per layer expected")
        for d_in, d_out, w, b in zip(self.layer_dims, self.layer_dims[1:], self.weights, self.biases):
            if w.shape != [d_in, d_out] or b.shape != [d_out]:
                raise ConfigurationError(
                    f"layer {d_in}->{d_out} has weight {w.shape} and bias {b.shape}"
                )

    @classmethod
    def initialize(
        cls,
        layer_dims: Sequence[int],
        rng: np.random.Generator,
        output_activation: Activation = Activation.LINEAR,
    ) -> "MlpParams":
        """Glorot-uniform weights in +-sqrt(6/(fan_in+fan_out)), zero biases."""
        weights, biases = [], []
        for d_in, d_out in zip(layer_dims, layer_dims[1:]):
            limit = np.sqrt(6.0 / (d_in + d_out))
            weights.append(Tensor.parameter(rng.uniform(-limit, limit, size=(d_in, d_out))))
            biases.append(Tensor.parameter(np.zeros(d_out)))
        return cls(layer_dims, weights, biases, output_activation=output_activation)

    @classmethod
    def zeros(cls, layer_dims: Sequence[int], output_activation: Activation = Activation.LINEAR) -> "MlpParams":
        weights = [Tensor.parameter(np.zeros((i, o))) for i, o in zip(layer_dims, layer_dims[1:])]
        biases = [Tensor.parameter(np.zeros(o)) for o in layer_dims[1:]]
        return cls(layer_dims, weights, biases, output_activation=output_activation)

    def parameters(self) -> list[Tensor]:
        params = []
        for w, b in zip(self.weights, self.biases):
            params.extend((w, b))
        return params

    @property
    def parameter_count(self) -> int:
        return sum(d_in * d_out + d_out for d_in, d_out in zip(self.layer_dims, self.layer_dims[1:]))

    @property
    def in_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def out_dim(self) -> int:
        return self.layer_dims[-1]

    def copy(self) -> "MlpParams":
        return MlpParams(
            self.layer_dims,
            [Tensor.parameter(w.values) for w in self.weights],
            [Tensor.parameter(b.values) for b in self.biases],
            output_activation=self.output_activation,
        )


def mlp_apply(params: MlpParams, x: Tensor) -> Tensor:
    """Applies the MLP to the last axis of ``x``; leading axes are batch axes."""
    if x.shape[-1] != params.in_dim:
        raise ConfigurationError(f"MLP expects width {params.in_dim}, got input of shape {x.shape}")
    h = x
    last = len(params.weights) - 1
    for layer, (w, b) in enumerate(zip(params.weights, params.biases)):
        h = h @ w + b
        if layer < last:
            h = relu(h)
    if params.output_activation is Activation.SIGMOID:
        h = sigmoid(h)
    return h
