"""Fully connected building blocks on top of the tape ops."""

from typing import Dict, List

import numpy as np

from . import ops
from .tensor import Tensor


class Linear:
    """Affine layer ``x @ W + b`` with Xavier-uniform weights and zero bias."""

    def __init__(
        self,
        in_features: int,
        out_features: int,
        rng: np.random.Generator,
        name: str,
        index: int = 0,
    ):
        limit = np.sqrt(6.0 / (in_features + out_features))
        self.weight = Tensor(
            rng.uniform(-limit, limit, size=(in_features, out_features)),
            requires_grad=True,
            name=f"{name}.W{index}",
        )
        self.bias = Tensor(
            np.zeros((1, out_features)), requires_grad=True, name=f"{name}.b{index}"
        )

    def __call__(self, x: Tensor) -> Tensor:
        bias = ops.broadcast_rows(self.bias, x.shape[0])
        return ops.add(ops.matmul(x, self.weight), bias)

    def parameters(self) -> List[Tensor]:
        return [self.weight, self.bias]


class MLP:
    """
    Stack of ``layers`` ELU-activated linear layers.

    The first layer maps ``in_features`` to ``hidden_units``; the rest are
    ``hidden_units`` square. Parameters are named ``<name>.W<i>``/``<name>.b<i>``.
    """

    def __init__(
        self,
        in_features: int,
        hidden_units: int,
        layers: int,
        rng: np.random.Generator,
        name: str,
    ):
        self.name = name
        self.layers = [
            Linear(in_features if i == 0 else hidden_units, hidden_units, rng, name, i)
            for i in range(layers)
        ]

    def __call__(self, x: Tensor) -> Tensor:
        for layer in self.layers:
            x = ops.elu(layer(x))
        return x

    def parameters(self) -> List[Tensor]:
        return [p for layer in self.layers for p in layer.parameters()]


def named_parameters(*modules) -> Dict[str, Tensor]:
    """Collect parameters of several modules keyed by their names."""
    params: Dict[str, Tensor] = {}
    for module in modules:
        for param in module.parameters():
            params[param.name] = param
    return params
