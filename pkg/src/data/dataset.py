"""Observational datasets (x, t, y) with their generation settings."""

from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Dict, Optional, Tuple

import numpy as np

from ..utils.config import (
    CURVE_SCALE,
    HIDDEN_CONFOUNDER_DIM,
    NOISE_SD,
    PROXY_NOISE_SD,
    TEST_FRACTION,
)
from ..utils.errors import DimensionError, ValidationError
from .curves import FAMILIES, STYLES

COVARIATE_KINDS = ("unit_norm_uniform", "proxy", "csv")


@dataclass
class DatasetSettings:
    """
    Everything needed to regenerate a benchmark dataset.

    ``covariates`` selects how x is produced: ``unit_norm_uniform`` and ``csv``
    for tcga style, ``proxy`` (x driven by the hidden confounders) for news
    style. ``binary_covariates`` turns proxies into 0/1 word-presence flags.
    """

    style: str = "tcga"
    family: int = 1
    n: int = 1000
    d_x: int = 50
    d_u: int = HIDDEN_CONFOUNDER_DIM
    alpha: float = 1.0
    scale: float = CURVE_SCALE
    noise_sd: float = NOISE_SD
    seed: int = 0
    covariates: Optional[str] = None
    covariates_path: Optional[str] = None
    proxy_noise_sd: float = PROXY_NOISE_SD
    binary_covariates: bool = False
    test_fraction: float = TEST_FRACTION

    def __post_init__(self) -> None:
        if self.covariates is None:
            self.covariates = "proxy" if self.style == "news" else "unit_norm_uniform"
        self.validate()

    def validate(self) -> None:
        """
        Check every field.

        Raises:
            ValidationError: On the first invalid field
        """
        if self.style not in STYLES:
            raise ValidationError(f"style must be one of {STYLES}, got '{self.style}'")
        if self.family not in FAMILIES:
            raise ValidationError(
                f"family must be one of {FAMILIES}, got {self.family}"
            )
        if self.covariates not in COVARIATE_KINDS:
            raise ValidationError(
                f"covariates must be one of {COVARIATE_KINDS}, "
                f"got '{self.covariates}'"
            )
        if self.covariates == "csv" and not self.covariates_path:
            raise ValidationError("covariates='csv' needs covariates_path")
        if self.n < 2:
            raise ValidationError(f"n must be >= 2, got {self.n}")
        if self.d_x < 1 or self.d_u < 1:
            raise ValidationError(
                f"d_x and d_u must be >= 1, got {self.d_x}, {self.d_u}"
            )
        if self.alpha < 1.0:
            raise ValidationError(f"alpha must be >= 1, got {self.alpha}")
        if self.noise_sd < 0.0 or self.proxy_noise_sd < 0.0:
            raise ValidationError("noise_sd and proxy_noise_sd must be >= 0")
        if not 0.0 < self.test_fraction < 1.0:
            raise ValidationError(
                f"test_fraction must lie in (0, 1), got {self.test_fraction}"
            )
        if self.binary_covariates and self.covariates != "proxy":
            raise ValidationError("binary_covariates requires proxy covariates")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "DatasetSettings":
        known = {f.name for f in fields(cls)}
        unknown = set(payload) - known
        if unknown:
            raise ValidationError(f"Unknown dataset keys: {sorted(unknown)}")
        return cls(**payload)


@dataclass
class Dataset:
    """
    Covariates, assigned doses and noisy outcomes plus a train/test split.

    Hidden confounders are deliberately absent; they live in the
    ``GroundTruthOracle``.
    """

    x: np.ndarray
    t: np.ndarray
    y: np.ndarray
    train_idx: np.ndarray
    test_idx: np.ndarray
    settings: DatasetSettings = field(default_factory=DatasetSettings)

    def __post_init__(self) -> None:
        self.x = np.atleast_2d(np.asarray(self.x, dtype=np.float64))
        self.t = np.asarray(self.t, dtype=np.float64).reshape(-1)
        self.y = np.asarray(self.y, dtype=np.float64).reshape(-1)
        self.train_idx = np.asarray(self.train_idx, dtype=np.int64).reshape(-1)
        self.test_idx = np.asarray(self.test_idx, dtype=np.int64).reshape(-1)
        n = self.x.shape[0]
        if self.t.shape[0] != n or self.y.shape[0] != n:
            raise DimensionError(
                f"x has {n} rows but t/y have {self.t.shape[0]}/{self.y.shape[0]}"
            )

    def __len__(self) -> int:
        return self.x.shape[0]

    @property
    def covariate_dim(self) -> int:
        return self.x.shape[1]

    @property
    def binary_covariates(self) -> bool:
        return bool(self.settings.binary_covariates)

    def train_arrays(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.x[self.train_idx], self.t[self.train_idx], self.y[self.train_idx]

    def test_arrays(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.x[self.test_idx], self.t[self.test_idx], self.y[self.test_idx]

    def with_split(self, train_idx: np.ndarray, test_idx: np.ndarray) -> "Dataset":
        """Same rows under a different split (e.g. one cross-validation fold)."""
        return replace(
            self, train_idx=np.asarray(train_idx), test_idx=np.asarray(test_idx)
        )
