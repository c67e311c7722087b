"""Adam optimizer and the minibatch iteration shared by all trainers."""

from dataclasses import dataclass, field
from typing import Iterator, List, Sequence

import numpy as np

from ..utils.config import ADAM_BETA1, ADAM_BETA2, ADAM_EPS
from ..utils.errors import DimensionError
from .tensor import Tensor


@dataclass
class AdamState:
    """First/second moment buffers and the step counter."""

    step: int = 0
    m: List[np.ndarray] = field(default_factory=list)
    v: List[np.ndarray] = field(default_factory=list)

    @classmethod
    def zeros_like(cls, params: Sequence[np.ndarray]) -> "AdamState":
        return cls(
            0, [np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params]
        )


def adam_step(
    params: Sequence[np.ndarray],
    grads: Sequence[np.ndarray],
    state: AdamState,
    lr: float,
    beta1: float = ADAM_BETA1,
    beta2: float = ADAM_BETA2,
    eps: float = ADAM_EPS,
) -> AdamState:
    """
    Apply one bias-corrected Adam update in place.

    Args:
        params: Parameter arrays, updated in place
        grads: Gradients matching ``params``
        state: Moment buffers, updated in place
        lr: Learning rate
        beta1: First moment decay
        beta2: Second moment decay
        eps: Denominator offset

    Returns:
        The updated state (same object)
    """
    if not (len(params) == len(grads) == len(state.m) == len(state.v)):
        raise DimensionError(
            "adam_step: params, grads and moment buffers differ in length"
        )
    state.step += 1
    correction1 = 1.0 - beta1**state.step
    correction2 = 1.0 - beta2**state.step
    for param, grad, m, v in zip(params, grads, state.m, state.v):
        if param.shape != grad.shape or param.shape != m.shape:
            raise DimensionError(f"adam_step: shape {param.shape} vs grad {grad.shape}")
        m *= beta1
        m += (1.0 - beta1) * grad
        v *= beta2
        v += (1.0 - beta2) * grad * grad
        param -= lr * (m / correction1) / (np.sqrt(v / correction2) + eps)
    return state


class Adam:
    """Stateful Adam over a list of tensors."""

    def __init__(
        self,
        params: Sequence[Tensor],
        lr: float,
        beta1: float = ADAM_BETA1,
        beta2: float = ADAM_BETA2,
        eps: float = ADAM_EPS,
    ):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.state = AdamState.zeros_like([p.values for p in self.params])

    def zero_grad(self) -> None:
        for param in self.params:
            param.zero_grad()

    def step(self) -> None:
        adam_step(
            [p.values for p in self.params],
            [p.grad for p in self.params],
            self.state,
            self.lr,
            self.beta1,
            self.beta2,
            self.eps,
        )


def iterate_minibatches(
    n: int, batch_size: int, rng: np.random.Generator
) -> Iterator[np.ndarray]:
    """Yield index batches of a fresh permutation drawn from ``rng``."""
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start : start + batch_size]
