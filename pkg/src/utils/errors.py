"""Exception hierarchy shared by every subpackage.

Each class also derives from the closest builtin so callers may catch either
``ValidationError`` or plain ``ValueError``.
"""

from typing import Optional


class ContiVaeError(Exception):
    """Base class for all toolkit errors."""

    category = "error"
    exit_code = 1


class ValidationError(ContiVaeError, ValueError):
    """Invalid user input: configs, flags, dataset files."""

    category = "validation"
    exit_code = 2


class ConfigurationError(ValidationError):
    """Inconsistent or missing configuration (e.g. absent ground truth)."""


class ContractError(ContiVaeError, ValueError):
    """A function was called outside its preconditions."""

    category = "validation"
    exit_code = 2


class DimensionError(ContractError):
    """Operand shapes do not agree."""


class DataIOError(ContiVaeError, OSError):
    """Reading or writing a file failed."""

    category = "io"
    exit_code = 3


class NumericError(ContiVaeError, ArithmeticError):
    """A computation produced a non-finite value or failed to converge."""

    category = "numeric"
    exit_code = 4

    def __init__(
        self,
        message: str,
        component: Optional[str] = None,
        epoch: Optional[int] = None,
        batch: Optional[int] = None,
    ):
        self.component = component
        self.epoch = epoch
        self.batch = batch
        fields = (("component", component), ("epoch", epoch), ("batch", batch))
        context = [f"{key}={value}" for key, value in fields if value is not None]
        if context:
            message = f"{message} ({', '.join(context)})"
        super().__init__(message)


class DomainError(NumericError):
    """An argument lies outside a function's mathematical domain."""


class DegenerateCurveError(ContiVaeError):
    """Curve parameters kept producing near-zero denominators."""
