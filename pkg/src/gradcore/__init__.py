"""Reverse-mode automatic differentiation over dense float64 tensors."""

from .tensor import ComputationTape, Tensor, backward

__all__ = ["ComputationTape", "Tensor", "backward"]
