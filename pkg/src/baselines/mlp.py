"""Plain MLP regressor on (x, t) -> y."""

import logging
from dataclasses import asdict, dataclass, fields
from typing import Any, Dict, Optional

import numpy as np

from ..gradcore import ops
from ..gradcore.nn import MLP, Linear, named_parameters
from ..gradcore.optim import Adam
from ..gradcore.tensor import Tensor
from ..model.checkpoint import (
    build_payload,
    read_checkpoint,
    restore_parameters,
    resume_hash,
)
from ..model.config import config_hash
from ..model.training import TrainTrace, run_epochs, standardize_outcomes
from ..processing.normalization import OutcomeScaler
from ..utils.config import (
    BATCH_SIZE,
    EPOCHS,
    HIDDEN_LAYERS,
    HIDDEN_UNITS,
    LEARNING_RATE,
)
from ..utils.errors import DimensionError, NumericError, ValidationError
from ..utils.files import write_json
from ..utils.seeding import derive_seed, make_rng

logger = logging.getLogger(__name__)


@dataclass
class MlpBaselineConfig:
    covariate_dim: int
    hidden_units: int = HIDDEN_UNITS
    hidden_layers: int = HIDDEN_LAYERS
    learning_rate: float = LEARNING_RATE
    epochs: int = EPOCHS
    batch_size: int = BATCH_SIZE
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("covariate_dim", "hidden_units", "hidden_layers", "batch_size"):
            if int(getattr(self, name)) < 1:
                raise ValidationError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.epochs < 0:
            raise ValidationError(f"epochs must be >= 0, got {self.epochs}")
        if self.learning_rate <= 0.0:
            raise ValidationError(
                f"learning_rate must be positive, got {self.learning_rate}"
            )

    @property
    def model_kind(self) -> str:
        return "mlp"

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "MlpBaselineConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(payload) - known
        if unknown:
            raise ValidationError(f"Unknown MLP config keys: {sorted(unknown)}")
        return cls(**payload)

    def hash(self) -> str:
        return config_hash(self.to_dict())


class MlpBaseline:
    """ELU trunk over ``x || t`` with a linear output unit."""

    def __init__(
        self, config: MlpBaselineConfig, rng: Optional[np.random.Generator] = None
    ):
        self.config = config
        rng = rng if rng is not None else make_rng(derive_seed(config.seed, "init"))
        self.trunk = MLP(
            config.covariate_dim + 1,
            config.hidden_units,
            config.hidden_layers,
            rng,
            "mlp",
        )
        self.head = Linear(config.hidden_units, 1, rng, "out")
        self.optimizer = Adam(list(self.parameters().values()), lr=config.learning_rate)
        self.epochs_completed = 0
        self.outcome_scaler: Optional[OutcomeScaler] = None

    def parameters(self) -> Dict[str, Tensor]:
        return named_parameters(self.trunk, self.head)

    def parameter_count(self) -> int:
        return sum(p.size for p in self.parameters().values())

    def forward(self, x: Any, t: Any) -> Tensor:
        """Predicted outcomes on the standardized scale, shape ``(n, 1)``."""
        if not isinstance(x, Tensor):
            x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.config.covariate_dim:
            raise DimensionError(
                f"MLP expects {self.config.covariate_dim} covariates, "
                f"got {x.shape[1]}"
            )
        t = np.asarray(t, dtype=np.float64).reshape(-1, 1)
        return self.head(self.trunk(ops.concat(x, t, axis=1)))


def fit_mlp(model: MlpBaseline, dataset) -> TrainTrace:
    """
    Minimize the mean squared error on the training split by minibatch Adam.

    Outcomes are standardized with the model's outcome scaler, fitted here on
    the first call.

    Returns:
        Trace with a ``total`` (summed batch MSE) column per epoch
    """
    cfg = model.config
    x, t, y = dataset.train_arrays()
    y = standardize_outcomes(model, y)

    def batch_loss(rows, rng, epoch, batch):
        residual = ops.sub(model.forward(x[rows], t[rows]), y[rows].reshape(-1, 1))
        mse = ops.mean(ops.square(residual))
        if not np.isfinite(mse.item()):
            raise NumericError(f"Non-finite MSE {mse.item()}", "mse", epoch, batch)
        return mse, {}

    trace = run_epochs(
        model.optimizer,
        x.shape[0],
        cfg.batch_size,
        cfg.seed,
        model.epochs_completed,
        cfg.epochs,
        batch_loss,
        ("total",),
        "mlp",
    )
    model.epochs_completed = max(model.epochs_completed, cfg.epochs)
    return trace


def train_mlp(dataset, config: MlpBaselineConfig) -> MlpBaseline:
    """Build and train a baseline; deterministic for a fixed ``config.seed``."""
    model = MlpBaseline(config)
    fit_mlp(model, dataset)
    return model


def mlp_predict(model: MlpBaseline, x: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Predicted outcomes in raw units, row ``i`` at dose ``t[i]``."""
    values = model.forward(x, t).values[:, 0]
    if model.outcome_scaler is not None:
        values = model.outcome_scaler.inverse(values)
    return values


def mlp_predict_curves(
    model: MlpBaseline, x: np.ndarray, t_grid: np.ndarray
) -> np.ndarray:
    """One forward pass per grid dose; returns ``(n, len(t_grid))``."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    t_grid = np.asarray(t_grid, dtype=np.float64)
    curves = np.empty((x.shape[0], t_grid.size))
    for g, dose in enumerate(t_grid):
        curves[:, g] = mlp_predict(model, x, np.full(x.shape[0], dose))
    return curves


def mlp_predict_curve(
    model: MlpBaseline, x: np.ndarray, t_grid: np.ndarray
) -> np.ndarray:
    return mlp_predict_curves(model, np.asarray(x).reshape(1, -1), t_grid)[0]


def save_mlp(model: MlpBaseline, path: str) -> str:
    payload = build_payload(
        "mlp",
        model.config.to_dict(),
        model.parameters(),
        model.optimizer,
        model.epochs_completed,
        model.outcome_scaler,
    )
    return write_json(path, payload)


def load_mlp(path: str) -> MlpBaseline:
    return mlp_from_payload(read_checkpoint(path, ["mlp"]))


def mlp_from_payload(payload: Dict[str, Any]) -> MlpBaseline:
    model = MlpBaseline(MlpBaselineConfig.from_dict(payload["config"]))
    restore_parameters(payload, model.parameters(), model.optimizer)
    model.epochs_completed = int(payload.get("epochs_completed", 0))
    model.outcome_scaler = OutcomeScaler.from_dict(payload.get("outcome_scaler"))
    return model


def resume_mlp(path: str, config: MlpBaselineConfig) -> MlpBaseline:
    """
    Load a baseline checkpoint to continue training under ``config``.

    Raises:
        ValidationError: If anything but ``epochs`` differs from the stored config
    """
    payload = read_checkpoint(path, ["mlp"])
    if resume_hash(payload["config"]) != resume_hash(config.to_dict()):
        raise ValidationError(
            f"Cannot resume from {path}: stored baseline config differs"
        )
    model = mlp_from_payload(payload)
    model.config = config
    logger.debug("Resuming baseline from epoch %d", model.epochs_completed)
    return model
