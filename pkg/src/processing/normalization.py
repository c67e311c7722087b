"""
Covariate scaling (per-feature min-max followed by unit row norm) and the
outcome standardization applied while fitting models.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np

from ..utils.config import IQR_PER_SD, OUTCOME_CLIP
from ..utils.errors import ContractError, DimensionError, ValidationError

logger = logging.getLogger(__name__)


def min_max_scale(x: np.ndarray) -> np.ndarray:
    """
    Scale each column to [0, 1].

    Constant columns (min == max) are left untouched and logged.

    Args:
        x: Matrix of shape ``(n, d)``

    Returns:
        New scaled matrix
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionError(f"min_max_scale expects a 2-D matrix, got shape {x.shape}")
    lo = x.min(axis=0)
    hi = x.max(axis=0)
    span = hi - lo
    constant = span == 0.0
    if np.any(constant):
        logger.warning(
            "Skipping min-max scaling of %d constant feature(s): %s",
            int(constant.sum()),
            np.flatnonzero(constant).tolist()[:10],
        )
    scaled = x.copy()
    live = ~constant
    scaled[:, live] = (x[:, live] - lo[live]) / span[live]
    return scaled


def row_normalize(x: np.ndarray) -> np.ndarray:
    """
    Scale every row to Euclidean norm 1.

    An all-zero row (e.g. the per-feature minimum after min-max scaling) becomes
    the uniform direction ``1 / sqrt(d)``.
    """
    x = np.asarray(x, dtype=np.float64)
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    out = np.divide(x, norms, out=np.empty_like(x), where=norms > 0.0)
    zero = norms[:, 0] == 0.0
    if np.any(zero):
        logger.debug(
            "%d zero covariate row(s) mapped to the uniform direction", int(zero.sum())
        )
        out[zero] = 1.0 / np.sqrt(x.shape[1])
    return out


def normalize_covariates(x: np.ndarray) -> np.ndarray:
    """Min-max per feature, then unit norm per row."""
    return row_normalize(min_max_scale(x))


@dataclass(frozen=True)
class OutcomeScaler:
    """
    Affine map between raw outcomes and the scale models are fitted on.

    ``center`` is the median of the training outcomes and ``scale`` their
    interquartile range over 1.349. Standardized targets are clipped to
    ``+/- OUTCOME_CLIP``; predictions are mapped back without clipping.
    """

    center: float = 0.0
    scale: float = 1.0

    @classmethod
    def fit(cls, y: np.ndarray) -> "OutcomeScaler":
        """
        Estimate centre and spread from training outcomes.

        Falls back to the standard deviation when the quartiles coincide and
        to 1 for constant outcomes.

        Raises:
            ContractError: On an empty sample
            ValidationError: On non-finite outcomes
        """
        y = np.asarray(y, dtype=np.float64).reshape(-1)
        if y.size == 0:
            raise ContractError("Cannot fit an outcome scaler on no rows")
        if not np.all(np.isfinite(y)):
            raise ValidationError("Outcomes must be finite")
        q1, median, q3 = np.percentile(y, [25.0, 50.0, 75.0])
        scale = (q3 - q1) / IQR_PER_SD
        if scale <= 0.0:
            scale = float(np.std(y))
        if scale <= 0.0:
            logger.warning("Constant training outcomes; leaving them unscaled")
            scale = 1.0
        clipped = np.abs(y - median) > OUTCOME_CLIP * scale
        if np.any(clipped):
            logger.info(
                "%d of %d training outcomes lie beyond %.0f robust stddevs "
                "(max |y| = %.4g) and are clipped",
                int(clipped.sum()),
                y.size,
                OUTCOME_CLIP,
                float(np.max(np.abs(y))),
            )
        return cls(float(median), float(scale))

    def transform(self, y: np.ndarray) -> np.ndarray:
        standardized = (np.asarray(y, dtype=np.float64) - self.center) / self.scale
        return np.clip(standardized, -OUTCOME_CLIP, OUTCOME_CLIP)

    def inverse(self, values: np.ndarray) -> np.ndarray:
        return self.center + self.scale * np.asarray(values, dtype=np.float64)

    def to_dict(self) -> Dict[str, float]:
        return {"center": self.center, "scale": self.scale}

    @classmethod
    def from_dict(cls, payload: Optional[Dict[str, Any]]) -> Optional["OutcomeScaler"]:
        """``None`` for models saved before any training."""
        if payload is None:
            return None
        try:
            scaler = cls(float(payload["center"]), float(payload["scale"]))
        except (KeyError, TypeError, ValueError) as e:
            raise ValidationError(f"Malformed outcome scaler: {e}") from e
        if not (np.isfinite(scaler.center) and scaler.scale > 0.0):
            raise ValidationError(f"Invalid outcome scaler {payload}")
        return scaler
