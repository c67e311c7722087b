"""Dose-response curves from a trained ContiVAE."""

from typing import Optional, Tuple

import numpy as np

from ..utils.errors import ContractError, DimensionError
from ..utils.seeding import derive_seed, make_rng
from .contivae import ContiVaeModel

# Rows of (L * chunk) latent draws pushed through the outcome net at once
PREDICT_CHUNK_ROWS = 256


def dose_grid(grid_size: int) -> np.ndarray:
    """Uniform grid of ``grid_size`` doses on [0, 1]."""
    if grid_size < 2:
        raise ContractError(f"grid_size must be >= 2, got {grid_size}")
    return np.linspace(0.0, 1.0, grid_size)


def argmax_dose(
    curves: np.ndarray, t_grid: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """Per-row argmax over the grid; ties resolve to the smallest dose."""
    curves = np.atleast_2d(curves)
    idx = np.argmax(curves, axis=1)
    return t_grid[idx], curves[np.arange(curves.shape[0]), idx]


def predict_curves(
    model: ContiVaeModel,
    x: np.ndarray,
    t_grid: np.ndarray,
    mc_samples: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """
    Estimate E[y | do(t), x] for every row of ``x`` on ``t_grid``.

    Each row is encoded along the predicted-mean path, ``L`` latent codes are
    drawn from q(z | x, t~, y~), and the outcome head mean is averaged over
    them at every dose. Averages are mapped back to raw outcome units through
    the model's outcome scaler.

    Args:
        model: Trained model
        x: Covariates, shape ``(n, d_x)``
        t_grid: Sorted doses in [0, 1]
        mc_samples: Number of latent draws L (default ``config.mc_samples_inference``)
        rng: Sampling stream (default: ``eval`` sub-seed of the model seed)

    Returns:
        Array of shape ``(n, len(t_grid))``
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    t_grid = np.asarray(t_grid, dtype=np.float64)
    if t_grid.ndim != 1 or t_grid.size == 0:
        raise ContractError("t_grid must be a non-empty vector")
    if np.any(np.diff(t_grid) < 0.0):
        raise ContractError("t_grid must be sorted")
    if x.shape[1] != model.config.covariate_dim:
        raise DimensionError(
            f"predict_curves: covariate width {x.shape[1]} "
            f"!= {model.config.covariate_dim}"
        )
    samples = model.config.mc_samples_inference
    if mc_samples is not None:
        samples = int(mc_samples)
    if samples < 1:
        raise ContractError(f"mc_samples must be >= 1, got {samples}")
    rng = rng if rng is not None else make_rng(derive_seed(model.config.seed, "eval"))

    curves = np.empty((x.shape[0], t_grid.size))
    chunk = max(1, PREDICT_CHUNK_ROWS // samples)
    for start in range(0, x.shape[0], chunk):
        rows = slice(start, start + chunk)
        z_dist = model.encode(x[rows]).z_dist
        mu, sigma = z_dist.mean.values, z_dist.stddev.values
        eps = rng.standard_normal((samples,) + mu.shape)
        z = (mu[None, :, :] + sigma[None, :, :] * eps).reshape(-1, mu.shape[1])
        for g, dose in enumerate(t_grid):
            outcome = model.outcome_dist(z, np.full(z.shape[0], dose)).mean.values
            curves[rows, g] = outcome.reshape(samples, -1).mean(axis=0)
    if model.outcome_scaler is not None:
        curves = model.outcome_scaler.inverse(curves)
    return curves


def predict_curve(
    model: ContiVaeModel,
    x: np.ndarray,
    t_grid: np.ndarray,
    mc_samples: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """Single-row form of ``predict_curves``."""
    x = np.asarray(x, dtype=np.float64).reshape(1, -1)
    return predict_curves(model, x, t_grid, mc_samples, rng)[0]


def predicted_optimal_dose(
    model: ContiVaeModel,
    x: np.ndarray,
    grid_size: int,
    mc_samples: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> Tuple[float, float]:
    """
    Dose maximizing the predicted curve on a uniform grid.

    Returns:
        ``(t_hat, y_hat)``; ties go to the smallest dose
    """
    grid = dose_grid(grid_size)
    curve = predict_curve(model, x, grid, mc_samples, rng)
    doses, values = argmax_dose(curve, grid)
    return float(doses[0]), float(values[0])
