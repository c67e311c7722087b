"""ContiVAE hyperparameters."""

import hashlib
import json
from dataclasses import asdict, dataclass, fields
from typing import Any, Dict

from ..utils.config import (
    BATCH_SIZE,
    EPOCHS,
    HIDDEN_LAYERS,
    HIDDEN_UNITS,
    LATENT_DIM,
    LEARNING_RATE,
    MC_SAMPLES_INFERENCE,
    RECON_SCALE,
    TILT,
)
from ..utils.errors import ValidationError

PRIOR_KINDS = ("tilted", "normal")
COVARIATE_LIKELIHOODS = ("gaussian", "bernoulli")


def config_hash(payload: Dict[str, Any]) -> str:
    """SHA-256 over the canonical JSON form of a config mapping."""
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass
class ContiVaeConfig:
    """Architecture, prior and training settings of one ContiVAE run."""

    covariate_dim: int
    latent_dim: int = LATENT_DIM
    hidden_units: int = HIDDEN_UNITS
    hidden_layers: int = HIDDEN_LAYERS
    tilt: float = TILT
    recon_scale: float = RECON_SCALE
    prior_kind: str = "tilted"
    learning_rate: float = LEARNING_RATE
    epochs: int = EPOCHS
    batch_size: int = BATCH_SIZE
    seed: int = 0
    mc_samples_inference: int = MC_SAMPLES_INFERENCE
    covariate_likelihood: str = "gaussian"

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        """
        Check ranges.

        Raises:
            ValidationError: On any out-of-range field
        """
        if not 0.0 < self.recon_scale <= 1.0:
            raise ValidationError(
                f"recon_scale (lambda) must lie in (0, 1], got {self.recon_scale}"
            )
        for name in ("covariate_dim", "latent_dim", "hidden_units", "hidden_layers",
                     "batch_size", "mc_samples_inference"):
            if int(getattr(self, name)) < 1:
                raise ValidationError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.epochs < 0:
            raise ValidationError(f"epochs must be >= 0, got {self.epochs}")
        if self.tilt < 0.0:
            raise ValidationError(f"tilt must be >= 0, got {self.tilt}")
        if self.learning_rate <= 0.0:
            raise ValidationError(
                f"learning_rate must be positive, got {self.learning_rate}"
            )
        if self.prior_kind not in PRIOR_KINDS:
            raise ValidationError(
                f"prior_kind must be one of {PRIOR_KINDS}, got '{self.prior_kind}'"
            )
        if self.covariate_likelihood not in COVARIATE_LIKELIHOODS:
            raise ValidationError(
                f"covariate_likelihood must be one of {COVARIATE_LIKELIHOODS}, "
                f"got '{self.covariate_likelihood}'"
            )

    @property
    def model_kind(self) -> str:
        return "contivae" if self.prior_kind == "tilted" else "contivae_n"

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "ContiVaeConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(payload) - known
        if unknown:
            raise ValidationError(f"Unknown ContiVAE config keys: {sorted(unknown)}")
        return cls(**payload)

    def hash(self) -> str:
        return config_hash(self.to_dict())


def mlp_parameter_count(in_features: int, hidden_units: int, layers: int) -> int:
    """Weights and biases of an ``MLP`` trunk."""
    first = in_features * hidden_units + hidden_units
    rest = (layers - 1) * (hidden_units * hidden_units + hidden_units)
    return first + rest


def contivae_parameter_count(
    d_x: int, d_z: int, h: int, layers: int, covariate_likelihood: str = "gaussian"
) -> int:
    """Closed-form parameter count of the network stack."""
    def head(out: int) -> int:
        return h * out + out

    x_heads = 2 if covariate_likelihood == "gaussian" else 1
    decoder = (
        mlp_parameter_count(d_z, h, layers) + x_heads * head(d_x)
        + mlp_parameter_count(d_z, h, layers) + 2 * head(1)
        + mlp_parameter_count(d_z + 1, h, layers) + 2 * head(1)
    )
    encoder = (
        mlp_parameter_count(d_x, h, layers) + 2 * head(1)
        + mlp_parameter_count(h + 1, h, layers) + 2 * head(1)
        + mlp_parameter_count(h + 2, h, layers) + 2 * head(d_z)
    )
    return decoder + encoder
