"""Beta-distributed dosage assignment with a prescribed mode."""

from dataclasses import dataclass

import numpy as np

from ..utils.config import DOSE_CLAMP_HIGH, DOSE_CLAMP_LOW
from ..utils.errors import ContractError


def beta_parameter(alpha: float, t_star):
    """
    beta = (alpha - 1) / t* + 2 - alpha, so that Beta(alpha, beta) has mode t*.

    ``t_star`` is clamped to [0.01, 0.99] first; beta diverges at t* = 0.
    Works on scalars and arrays.
    """
    clamped = np.clip(t_star, DOSE_CLAMP_LOW, DOSE_CLAMP_HIGH)
    return (alpha - 1.0) / clamped + 2.0 - alpha


@dataclass
class BetaAssigner:
    """Skew ``alpha`` and per-sample mode ``t_star``."""

    alpha: float
    t_star: float

    def __post_init__(self) -> None:
        if self.alpha < 1.0:
            raise ContractError(f"BetaAssigner needs alpha >= 1, got {self.alpha}")

    @property
    def beta(self) -> float:
        return float(beta_parameter(self.alpha, self.t_star))


def sample_beta(assigner: BetaAssigner, rng: np.random.Generator) -> float:
    """
    One draw from Beta(alpha, beta) as a ratio of two Gamma draws.

    numpy's ``standard_gamma`` is the Marsaglia-Tsang sampler.

    Raises:
        ContractError: If the computed beta is not positive
    """
    beta = assigner.beta
    if beta <= 0.0:
        raise ContractError(
            f"Beta parameter {beta} <= 0 for alpha={assigner.alpha}, "
            f"t*={assigner.t_star}"
        )
    x = rng.standard_gamma(assigner.alpha)
    y = rng.standard_gamma(beta)
    return float(x / (x + y))


def sample_beta_many(
    alpha: float, t_star: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Vectorized ``sample_beta`` over per-sample modes."""
    if alpha < 1.0:
        raise ContractError(f"Dosage skew alpha must be >= 1, got {alpha}")
    betas = beta_parameter(alpha, np.asarray(t_star, dtype=np.float64))
    bad = np.flatnonzero(betas <= 0.0)
    if bad.size:
        raise ContractError(f"Beta parameter <= 0 at sample index {int(bad[0])}")
    x = rng.standard_gamma(alpha, size=betas.shape)
    y = rng.standard_gamma(betas)
    return x / (x + y)
