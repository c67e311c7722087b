"""Differentiable operations recorded on the active computation tape."""

from typing import Any, Callable, Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit

from ..utils.errors import ContractError, DimensionError, DomainError
from .tensor import BackwardFn, TapeRecord, Tensor, active_tape, as_tensor


def _emit(
    op: str, inputs: Sequence[Tensor], values: np.ndarray, backward_fn: BackwardFn
) -> Tensor:
    tape = active_tape()
    needs_grad = tape is not None and any(t.requires_grad for t in inputs)
    out = Tensor.from_array(
        np.asarray(values, dtype=np.float64), requires_grad=needs_grad
    )
    if needs_grad:
        tape.record(TapeRecord(op, tuple(inputs), out, backward_fn))
    return out


def _check_binary(op: str, a: Tensor, b: Tensor) -> None:
    # Only scalar-vs-tensor broadcasting is supported
    if a.shape != b.shape and a.size != 1 and b.size != 1:
        raise DimensionError(
            f"{op}: operand shapes {a.shape} and {b.shape} do not agree"
        )


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    if grad.shape == shape:
        return grad
    return np.full(shape, grad.sum())


# ---------------------------------------------------------------------------
# Elementwise arithmetic
# ---------------------------------------------------------------------------


def add(a: Any, b: Any) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_binary("add", a, b)
    return _emit(
        "add",
        (a, b),
        a.values + b.values,
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)),
    )


def sub(a: Any, b: Any) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_binary("sub", a, b)
    return _emit(
        "sub",
        (a, b),
        a.values - b.values,
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)),
    )


def mul(a: Any, b: Any) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_binary("mul", a, b)
    return _emit(
        "mul",
        (a, b),
        a.values * b.values,
        lambda g: (
            _unbroadcast(g * b.values, a.shape),
            _unbroadcast(g * a.values, b.shape),
        ),
    )


def div(a: Any, b: Any) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_binary("div", a, b)
    if np.any(b.values == 0.0):
        raise DomainError("div: division by zero")
    out = a.values / b.values
    return _emit(
        "div",
        (a, b),
        out,
        lambda g: (
            _unbroadcast(g / b.values, a.shape),
            _unbroadcast(-g * out / b.values, b.shape),
        ),
    )


def neg(x: Any) -> Tensor:
    x = as_tensor(x)
    return _emit("neg", (x,), -x.values, lambda g: (-g,))


def square(x: Any) -> Tensor:
    x = as_tensor(x)
    return _emit("square", (x,), x.values * x.values, lambda g: (2.0 * x.values * g,))


def exp(x: Any) -> Tensor:
    x = as_tensor(x)
    out = np.exp(x.values)
    return _emit("exp", (x,), out, lambda g: (g * out,))


def log(x: Any) -> Tensor:
    x = as_tensor(x)
    if np.any(x.values <= 0.0):
        raise DomainError("log: argument has non-positive entries")
    return _emit("log", (x,), np.log(x.values), lambda g: (g / x.values,))


def sqrt(x: Any) -> Tensor:
    x = as_tensor(x)
    if np.any(x.values < 0.0):
        raise DomainError("sqrt: argument has negative entries")
    out = np.sqrt(x.values)
    return _emit("sqrt", (x,), out, lambda g: (0.5 * g / out,))


_ELEMENTWISE: Dict[str, Callable[..., Tensor]] = {
    "add": add,
    "sub": sub,
    "mul": mul,
    "div": div,
    "neg": neg,
    "square": square,
    "exp": exp,
    "log": log,
    "sqrt": sqrt,
}


def elementwise(op: str, *operands: Any) -> Tensor:
    """
    Apply a named elementwise operation.

    Args:
        op: One of add, sub, mul, div, neg, square, exp, log, sqrt
        *operands: One or two tensors (or scalars)

    Returns:
        Result tensor
    """
    try:
        fn = _ELEMENTWISE[op]
    except KeyError:
        raise ContractError(f"Unknown elementwise op '{op}'") from None
    return fn(*operands)


# ---------------------------------------------------------------------------
# Activations
# ---------------------------------------------------------------------------


def softplus(x: Any) -> Tensor:
    """log(1 + exp(x)), computed without overflow."""
    x = as_tensor(x)
    v = x.values
    out = np.maximum(v, 0.0) + np.log1p(np.exp(-np.abs(v)))
    return _emit("softplus", (x,), out, lambda g: (g * expit(v),))


def sigmoid(x: Any) -> Tensor:
    x = as_tensor(x)
    out = expit(x.values)
    return _emit("sigmoid", (x,), out, lambda g: (g * out * (1.0 - out),))


def elu(x: Any) -> Tensor:
    x = as_tensor(x)
    v = x.values
    positive = v > 0.0
    out = np.where(positive, v, np.expm1(np.minimum(v, 0.0)))
    return _emit("elu", (x,), out, lambda g: (g * np.where(positive, 1.0, out + 1.0),))


# ---------------------------------------------------------------------------
# Linear algebra and shape plumbing
# ---------------------------------------------------------------------------


def matmul(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.values.ndim != 2 or b.values.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul: cannot multiply shapes {a.shape} and {b.shape}")
    return _emit(
        "matmul",
        (a, b),
        a.values @ b.values,
        lambda g: (g @ b.values.T, a.values.T @ g),
    )


def concat(*tensors: Any, axis: int = -1) -> Tensor:
    """
    Concatenate tensors along ``axis``; the adjoint is split on the way back.

    Raises:
        DimensionError: If shapes differ on a non-concatenation axis
    """
    parts = [as_tensor(t) for t in tensors]
    if not parts:
        raise ContractError("concat needs at least one operand")
    ndim = parts[0].values.ndim
    axis_ = axis % ndim if ndim else 0
    for part in parts[1:]:
        other = [d for i, d in enumerate(part.shape) if i != axis_]
        first = [d for i, d in enumerate(parts[0].shape) if i != axis_]
        if part.values.ndim != ndim or other != first:
            raise DimensionError(
                f"concat: shapes {parts[0].shape} and {part.shape} "
                f"disagree off axis {axis}"
            )
    sizes = [p.shape[axis_] for p in parts]
    bounds = np.cumsum(sizes)[:-1]
    out = np.concatenate([p.values for p in parts], axis=axis_)
    return _emit("concat", parts, out, lambda g: tuple(np.split(g, bounds, axis=axis_)))


def sum(x: Any, axis: Optional[int] = None) -> Tensor:  # noqa: A001 - mirrors numpy
    x = as_tensor(x)
    out = x.values.sum(axis=axis)

    def backward_fn(g: np.ndarray) -> Tuple[np.ndarray]:
        if axis is None:
            return (np.full(x.shape, float(g)),)
        return (np.broadcast_to(np.expand_dims(g, axis), x.shape).copy(),)

    return _emit("sum", (x,), out, backward_fn)


def mean(x: Any, axis: Optional[int] = None) -> Tensor:
    x = as_tensor(x)
    count = x.size if axis is None else x.shape[axis]
    return mul(sum(x, axis=axis), 1.0 / count)


def reshape(x: Any, shape: Tuple[int, ...]) -> Tensor:
    x = as_tensor(x)
    try:
        out = x.values.reshape(shape)
    except ValueError as e:
        raise DimensionError(f"reshape: cannot view {x.shape} as {shape}") from e
    return _emit("reshape", (x,), out, lambda g: (g.reshape(x.shape),))


def broadcast_rows(x: Any, rows: int) -> Tensor:
    """Replicate a ``(1, n)`` row (or ``(n,)`` vector) into ``(rows, n)``."""
    x = as_tensor(x)
    row = x.values.reshape(1, -1)
    out = np.repeat(row, rows, axis=0)
    return _emit(
        "broadcast_rows", (x,), out, lambda g: (g.sum(axis=0).reshape(x.shape),)
    )


def row_norm(x: Any) -> Tensor:
    """Euclidean norm of each row of a 2-D tensor; zero subgradient at the origin."""
    x = as_tensor(x)
    if x.values.ndim != 2:
        raise DimensionError(f"row_norm expects a 2-D tensor, got shape {x.shape}")
    norms = np.sqrt(np.sum(x.values * x.values, axis=1))

    def backward_fn(g: np.ndarray) -> Tuple[np.ndarray]:
        safe = np.where(norms > 0.0, norms, 1.0)
        scale = np.where(norms > 0.0, g / safe, 0.0)
        return (x.values * scale[:, None],)

    return _emit("row_norm", (x,), norms, backward_fn)
