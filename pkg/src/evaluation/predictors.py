"""Uniform curve-prediction interface over every model kind."""

from typing import Any, Optional, Protocol, Tuple

import numpy as np

from ..baselines.mlp import (
    MlpBaseline,
    MlpBaselineConfig,
    fit_mlp,
    mlp_from_payload,
    mlp_predict_curves,
)
from ..data.curves import GroundTruthOracle
from ..model.checkpoint import build_payload, model_from_payload, read_checkpoint
from ..model.config import ContiVaeConfig, contivae_parameter_count, mlp_parameter_count
from ..model.contivae import ContiVaeModel, init_model
from ..model.inference import predict_curves
from ..model.training import TrainTrace, train
from ..utils.errors import ConfigurationError, ValidationError
from ..utils.files import write_json
from ..utils.seeding import derive_seed, make_rng


class CurvePredictor(Protocol):
    kind: str

    def predict_curves(
        self, x: np.ndarray, t_grid: np.ndarray, rows: Optional[np.ndarray] = None
    ) -> np.ndarray:
        """Curves of shape ``(n, len(t_grid))``; ``rows`` are dataset row indices."""
        ...

    def parameter_count(self) -> int:
        ...


class ContiVaePredictor:
    def __init__(
        self,
        model: ContiVaeModel,
        mc_samples: Optional[int] = None,
        seed: Optional[int] = None,
    ):
        self.model = model
        self.kind = model.config.model_kind
        self.mc_samples = mc_samples
        self.seed = model.config.seed if seed is None else seed

    def predict_curves(self, x, t_grid, rows=None):
        rng = make_rng(derive_seed(self.seed, "eval"))
        return predict_curves(self.model, x, t_grid, self.mc_samples, rng)

    def parameter_count(self) -> int:
        return self.model.parameter_count()


class MlpPredictor:
    kind = "mlp"

    def __init__(self, model: MlpBaseline):
        self.model = model

    def predict_curves(self, x, t_grid, rows=None):
        return mlp_predict_curves(self.model, x, t_grid)

    def parameter_count(self) -> int:
        return self.model.parameter_count()


class OraclePredictor:
    """Returns the true curves; an upper bound for any real model."""

    kind = "oracle"

    def __init__(self, oracle: GroundTruthOracle):
        self.oracle = oracle

    def predict_curves(self, x, t_grid, rows=None):
        return self.oracle.true_curves(x, t_grid, rows)

    def parameter_count(self) -> int:
        return 0


def save_oracle_checkpoint(path: str) -> str:
    """Checkpoint standing for the ground truth of any dataset it is evaluated on."""
    return write_json(path, build_payload("oracle", {}, {}, None, 0))


def load_predictor(
    path: str,
    oracle: Optional[GroundTruthOracle] = None,
    mc_samples: Optional[int] = None,
) -> CurvePredictor:
    """
    Restore a predictor from any checkpoint kind.

    Raises:
        ConfigurationError: For an oracle checkpoint without ground truth
    """
    payload = read_checkpoint(path)
    kind = payload["kind"]
    if kind == "mlp":
        return MlpPredictor(mlp_from_payload(payload))
    if kind == "oracle":
        if oracle is None:
            raise ConfigurationError(
                "Oracle checkpoint needs the dataset's ground truth"
            )
        return OraclePredictor(oracle)
    return ContiVaePredictor(model_from_payload(payload), mc_samples)


def train_predictor(config: Any, dataset) -> Tuple[CurvePredictor, TrainTrace]:
    """Fit a fresh model of the kind selected by the config type."""
    if isinstance(config, MlpBaselineConfig):
        model = MlpBaseline(config)
        return MlpPredictor(model), fit_mlp(model, dataset)
    if isinstance(config, ContiVaeConfig):
        model = init_model(config)
        return ContiVaePredictor(model), train(model, dataset)
    raise ValidationError(f"Cannot train a model from {type(config).__name__}")


def config_parameter_count(config: Any) -> int:
    """Parameter count implied by a config, without building the model."""
    if isinstance(config, MlpBaselineConfig):
        trunk = mlp_parameter_count(
            config.covariate_dim + 1, config.hidden_units, config.hidden_layers
        )
        return trunk + config.hidden_units + 1
    return contivae_parameter_count(
        config.covariate_dim,
        config.latent_dim,
        config.hidden_units,
        config.hidden_layers,
        config.covariate_likelihood,
    )
