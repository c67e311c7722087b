"""Diagonal Gaussian densities, reparameterized sampling and closed-form KL."""

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from ..gradcore import ops
from ..gradcore.tensor import Tensor, as_tensor
from ..utils.errors import ContractError, DimensionError

HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass
class DiagGaussian:
    """Independent Gaussian per entry; ``stddev`` is strictly positive upstream."""

    mean: Tensor
    stddev: Tensor

    def __post_init__(self) -> None:
        self.mean = as_tensor(self.mean)
        self.stddev = as_tensor(self.stddev)
        if self.mean.shape != self.stddev.shape:
            raise DimensionError(
                f"DiagGaussian: mean {self.mean.shape} and "
                f"stddev {self.stddev.shape} differ"
            )


def gaussian_log_prob(x: Any, g: DiagGaussian) -> Tensor:
    """
    Sum of per-entry Gaussian log densities.

    Args:
        x: Observations with the shape of ``g.mean``
        g: Diagonal Gaussian

    Returns:
        Scalar tensor, differentiable w.r.t. ``x``, mean and stddev

    Raises:
        ContractError: If any stddev entry is not positive
    """
    x = as_tensor(x)
    if x.shape != g.mean.shape:
        raise DimensionError(f"gaussian_log_prob: x {x.shape} vs mean {g.mean.shape}")
    if np.any(g.stddev.values <= 0.0):
        raise ContractError("gaussian_log_prob: stddev must be strictly positive")
    standardized = ops.div(ops.sub(x, g.mean), g.stddev)
    per_entry = ops.add(
        ops.add(ops.log(g.stddev), ops.mul(ops.square(standardized), 0.5)),
        HALF_LOG_2PI,
    )
    return ops.neg(ops.sum(per_entry))


def reparam_sample(g: DiagGaussian, rng: np.random.Generator) -> Tensor:
    """Draw ``mean + stddev * eps`` with ``eps ~ N(0, I)``; gradients reach both."""
    eps = rng.standard_normal(g.mean.shape)
    return ops.add(g.mean, ops.mul(g.stddev, eps))


def normal_kl(g: DiagGaussian) -> Tensor:
    """KL(N(mean, stddev^2) || N(0, I)) summed over all entries."""
    var = ops.square(g.stddev)
    terms = ops.sub(
        ops.add(ops.square(g.mean), var),
        ops.add(ops.mul(ops.log(g.stddev), 2.0), 1.0),
    )
    return ops.mul(ops.sum(terms), 0.5)


def bernoulli_log_prob(x: Any, logits: Tensor) -> Tensor:
    """Sum of ``x * l - softplus(l)`` for binary observations ``x``."""
    x = as_tensor(x)
    if x.shape != logits.shape:
        raise DimensionError(
            f"bernoulli_log_prob: x {x.shape} vs logits {logits.shape}"
        )
    return ops.sum(ops.sub(ops.mul(x, logits), ops.softplus(logits)))
