"""Curve-level error metrics."""

import math
from typing import Tuple

import numpy as np
from scipy.integrate import trapezoid

from ..model.inference import argmax_dose
from ..utils.errors import ContractError, DimensionError


def mise(pred_curves: np.ndarray, true_curves: np.ndarray, t_grid: np.ndarray) -> float:
    """
    Mean integrated squared error.

    (1/N) sum_i integral (y_i(t) - y_hat_i(t))^2 dt, the integral taken by the
    trapezoidal rule on ``t_grid``.

    Raises:
        DimensionError: If the curve matrices or the grid disagree in shape
    """
    pred = np.atleast_2d(np.asarray(pred_curves, dtype=np.float64))
    true = np.atleast_2d(np.asarray(true_curves, dtype=np.float64))
    t_grid = np.asarray(t_grid, dtype=np.float64)
    if pred.shape != true.shape:
        raise DimensionError(f"mise: predicted {pred.shape} vs true {true.shape}")
    if pred.shape[1] != t_grid.size:
        raise DimensionError(
            f"mise: {pred.shape[1]} curve points vs grid of {t_grid.size}"
        )
    if pred.shape[0] == 0:
        raise ContractError("mise needs at least one curve")
    return float(np.mean(trapezoid((true - pred) ** 2, t_grid, axis=1)))


def root_mise(
    pred_curves: np.ndarray, true_curves: np.ndarray, t_grid: np.ndarray
) -> float:
    return math.sqrt(mise(pred_curves, true_curves, t_grid))


def dpe(y_at_true: np.ndarray, y_at_pred: np.ndarray) -> float:
    """
    Dosage policy error.

    Args:
        y_at_true: Noiseless outcome of each unit at its true optimal dose
        y_at_pred: Noiseless outcome of each unit at the predicted optimal dose

    Returns:
        (1/N) sum_i (y_i(t*) - y_i(t_hat*))^2
    """
    a = np.asarray(y_at_true, dtype=np.float64).reshape(-1)
    b = np.asarray(y_at_pred, dtype=np.float64).reshape(-1)
    if a.shape != b.shape:
        raise DimensionError(f"dpe: {a.shape} vs {b.shape}")
    return float(np.mean((a - b) ** 2))


def root_dpe(y_at_true: np.ndarray, y_at_pred: np.ndarray) -> float:
    return math.sqrt(dpe(y_at_true, y_at_pred))


def predicted_optimal_doses(
    curves: np.ndarray, t_grid: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """Per-row argmax dose (smallest dose on ties) and the curve value there."""
    return argmax_dose(
        np.asarray(curves, dtype=np.float64), np.asarray(t_grid, dtype=np.float64)
    )
