"""Dense tensors and the computation tape for reverse-mode differentiation."""

import threading
from dataclasses import dataclass
from typing import Any, Callable, List, Optional, Sequence, Tuple

import numpy as np

from ..utils.errors import ContractError

BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


class Tensor:
    """A dense float64 array that can take part in reverse-mode differentiation."""

    def __init__(
        self, values: Any, requires_grad: bool = False, name: Optional[str] = None
    ):
        """
        Create a tensor.

        Args:
            values: Array-like payload, copied into row-major float64 storage
            requires_grad: Whether adjoints are accumulated into ``grad``
            name: Optional label (parameter key such as ``f1.W0``)
        """
        self.values = np.array(values, dtype=np.float64, order="C")
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        if requires_grad:
            self.grad = np.zeros_like(self.values)
        self.name = name

    @classmethod
    def from_array(cls, values: np.ndarray, requires_grad: bool = False) -> "Tensor":
        """Wrap an already float64 array without copying it."""
        tensor = cls.__new__(cls)
        tensor.values = values
        tensor.requires_grad = requires_grad
        tensor.grad = np.zeros_like(values) if requires_grad else None
        tensor.name = None
        return tensor

    def __repr__(self) -> str:
        label = f" {self.name}" if self.name else ""
        return f"<Tensor{label} shape={self.shape}, requires_grad={self.requires_grad}>"

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.values.shape

    @property
    def size(self) -> int:
        return self.values.size

    def item(self) -> float:
        if self.values.size != 1:
            raise ContractError(f"item() needs a single value, got shape {self.shape}")
        return float(self.values.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.values.copy()

    def zero_grad(self) -> None:
        if self.grad is not None:
            self.grad.fill(0.0)

    # Operator sugar; the implementations live in ops.py
    def __add__(self, other: Any) -> "Tensor":
        from . import ops

        return ops.add(self, other)

    def __radd__(self, other: Any) -> "Tensor":
        from . import ops

        return ops.add(other, self)

    def __sub__(self, other: Any) -> "Tensor":
        from . import ops

        return ops.sub(self, other)

    def __rsub__(self, other: Any) -> "Tensor":
        from . import ops

        return ops.sub(other, self)

    def __mul__(self, other: Any) -> "Tensor":
        from . import ops

        return ops.mul(self, other)

    def __rmul__(self, other: Any) -> "Tensor":
        from . import ops

        return ops.mul(other, self)

    def __truediv__(self, other: Any) -> "Tensor":
        from . import ops

        return ops.div(self, other)

    def __neg__(self) -> "Tensor":
        from . import ops

        return ops.neg(self)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        from . import ops

        return ops.matmul(self, other)


def as_tensor(value: Any) -> Tensor:
    """Wrap constants; tensors pass through unchanged."""
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


@dataclass
class TapeRecord:
    """One executed differentiable operation."""

    op: str
    inputs: Tuple[Tensor, ...]
    output: Tensor
    backward: BackwardFn


class ComputationTape:
    """
    Ordered record of differentiable operations.

    Use as a context manager; operations executed inside the ``with`` block on
    the same thread are recorded when any operand requires a gradient.
    """

    def __init__(self) -> None:
        self.records: List[TapeRecord] = []
        self.consumed = False

    def __enter__(self) -> "ComputationTape":
        _tape_stack().append(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        stack = _tape_stack()
        if stack and stack[-1] is self:
            stack.pop()

    def __len__(self) -> int:
        return len(self.records)

    def record(self, record: TapeRecord) -> None:
        if self.consumed:
            raise ContractError("Cannot record onto a tape that was already consumed")
        self.records.append(record)

    def backward(self, loss: Tensor) -> None:
        """
        Propagate adjoints from ``loss`` to every tensor that requires them.

        Args:
            loss: Scalar tensor produced on this tape

        Raises:
            ContractError: If ``loss`` is not scalar or the tape was consumed
        """
        if loss.size != 1:
            raise ContractError(
                f"backward() needs a scalar loss, got shape {loss.shape}"
            )
        if self.consumed:
            raise ContractError("Tape already consumed by a backward pass")
        self.consumed = True

        if not loss.requires_grad:
            return

        loss.grad += 1.0
        for record in reversed(self.records):
            adjoint = record.output.grad
            if adjoint is None or not adjoint.any():
                continue
            input_grads = record.backward(adjoint)
            for tensor, grad in zip(record.inputs, input_grads):
                if grad is None or not tensor.requires_grad:
                    continue
                tensor.grad += grad


_local = threading.local()


def _tape_stack() -> List[ComputationTape]:
    if not hasattr(_local, "stack"):
        _local.stack = []
    return _local.stack


def active_tape() -> Optional[ComputationTape]:
    """Return the innermost tape of the current thread, if any."""
    stack = _tape_stack()
    return stack[-1] if stack else None


def backward(loss: Tensor, tape: Optional[ComputationTape] = None) -> None:
    """Run the backward pass on ``tape`` (default: the active tape)."""
    tape = tape if tape is not None else active_tape()
    if tape is None:
        raise ContractError("backward() called without a computation tape")
    tape.backward(loss)
