"""
Experiment configuration: one JSON file, CLI overrides, stable hash.

Example file::

    {
      "dataset": {"style": "news", "family": 1, "n": 3000, "d_x": 50, "alpha": 3.0},
      "model": {"kind": "contivae", "recon_scale": 0.1},
      "eval": {"grid_size": 65, "repeat_runs": 3},
      "sweep": {"axis": "alpha", "values": [1, 2, 3, 4], "models": ["contivae", "mlp"]},
      "output_dir": "output/news_f1"
    }
"""

import copy
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Dict, List, Optional

from ..baselines.mlp import MlpBaselineConfig
from ..data.dataset import DatasetSettings
from ..model.config import ContiVaeConfig, config_hash
from .config import (
    BATCH_SIZE,
    CV_FOLDS,
    GRID_SIZE,
    HIDDEN_LAYERS,
    HIDDEN_UNITS,
    LATENT_DIM,
    LEARNING_RATE,
    EPOCHS,
    MC_SAMPLES_INFERENCE,
    OUTPUT_DIR,
    RECON_SCALE,
    REPEAT_RUNS,
    STYLE_PRESETS,
    TILT,
)
from .errors import ConfigurationError, ValidationError
from .files import read_json
from .seeding import derive_seed

MODEL_CHOICES = ("contivae", "contivae_n", "mlp", "oracle")
SWEEP_AXES = ("alpha", "lambda", "hidden_units", "latent_dim")


@dataclass
class ModelSettings:
    """Model section; ``learning_rate``/``epochs`` left as None use the preset."""

    kind: str = "contivae"
    latent_dim: int = LATENT_DIM
    hidden_units: int = HIDDEN_UNITS
    hidden_layers: int = HIDDEN_LAYERS
    tilt: float = TILT
    recon_scale: float = RECON_SCALE
    learning_rate: Optional[float] = None
    epochs: Optional[int] = None
    batch_size: int = BATCH_SIZE


@dataclass
class EvalSettings:
    grid_size: int = GRID_SIZE
    mc_samples: int = MC_SAMPLES_INFERENCE
    repeat_runs: int = REPEAT_RUNS
    folds: int = CV_FOLDS


@dataclass
class CvSettings:
    """Candidate grids for cross-validation; empty lists keep the model value."""

    recon_scales: List[float] = field(default_factory=lambda: [0.1, 0.5, 1.0])
    hidden_units: List[int] = field(default_factory=list)
    latent_dims: List[int] = field(default_factory=list)


@dataclass
class SweepSettings:
    axis: str = "alpha"
    values: List[float] = field(default_factory=lambda: [1.0, 2.0, 3.0, 4.0])
    models: List[str] = field(default_factory=lambda: ["contivae", "mlp"])


@dataclass
class ExperimentConfig:
    """Every knob of one experiment; the dataset seed is the master seed."""

    dataset: DatasetSettings = field(default_factory=DatasetSettings)
    model: ModelSettings = field(default_factory=ModelSettings)
    eval: EvalSettings = field(default_factory=EvalSettings)
    cv: CvSettings = field(default_factory=CvSettings)
    sweep: SweepSettings = field(default_factory=SweepSettings)
    output_dir: str = OUTPUT_DIR

    @property
    def seed(self) -> int:
        return self.dataset.seed

    def validate(self) -> "ExperimentConfig":
        """
        Check cross-section constraints.

        Raises:
            ValidationError: On any invalid value
        """
        self.dataset.validate()
        m, e = self.model, self.eval
        if m.kind not in MODEL_CHOICES:
            raise ValidationError(
                f"model kind must be one of {MODEL_CHOICES}, got '{m.kind}'"
            )
        if not 0.0 < m.recon_scale <= 1.0:
            raise ValidationError(f"lambda must lie in (0, 1], got {m.recon_scale}")
        if e.grid_size < 2:
            raise ValidationError(f"grid_size must be >= 2, got {e.grid_size}")
        if e.repeat_runs < 1 or e.mc_samples < 1:
            raise ValidationError("repeat_runs and mc_samples must be >= 1")
        if e.folds < 2:
            raise ValidationError(f"folds must be >= 2, got {e.folds}")
        if self.sweep.axis not in SWEEP_AXES:
            raise ValidationError(
                f"sweep axis must be one of {SWEEP_AXES}, got '{self.sweep.axis}'"
            )
        if not self.sweep.values:
            raise ValidationError("sweep needs at least one axis value")
        unknown = [k for k in self.sweep.models if k not in MODEL_CHOICES]
        if unknown:
            raise ValidationError(f"Unknown sweep models: {unknown}")
        return self

    def resolved_model(self) -> ModelSettings:
        """Model section with style presets filled in."""
        preset = STYLE_PRESETS.get(self.dataset.style, {})
        learning_rate = self.model.learning_rate
        if learning_rate is None:
            learning_rate = preset.get("learning_rate", LEARNING_RATE)
        epochs = self.model.epochs
        if epochs is None:
            epochs = preset.get("epochs", EPOCHS)
        return replace(self.model, learning_rate=learning_rate, epochs=epochs)

    def to_dict(self) -> Dict[str, Any]:
        payload = asdict(self)
        payload["model"] = asdict(self.resolved_model())
        return payload

    def hash(self) -> str:
        return config_hash(self.to_dict())

    def cell_hash(self) -> str:
        """Hash of what a sweep cell's results depend on (no paths or sweep plan)."""
        payload = self.to_dict()
        return config_hash({key: payload[key] for key in ("dataset", "model", "eval")})


def _section(cls, payload: Optional[Dict[str, Any]], name: str):
    payload = payload or {}
    if not isinstance(payload, dict):
        raise ConfigurationError(f"Section '{name}' must be an object")
    known = {f.name for f in fields(cls)}
    unknown = set(payload) - known
    if unknown:
        raise ConfigurationError(f"Unknown keys in '{name}': {sorted(unknown)}")
    try:
        return cls(**payload)
    except TypeError as e:
        raise ConfigurationError(f"Invalid '{name}' section: {e}") from e


def experiment_from_dict(payload: Dict[str, Any]) -> ExperimentConfig:
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(payload) - known
    if unknown:
        raise ConfigurationError(f"Unknown config sections: {sorted(unknown)}")
    return ExperimentConfig(
        dataset=_section(DatasetSettings, payload.get("dataset"), "dataset"),
        model=_section(ModelSettings, payload.get("model"), "model"),
        eval=_section(EvalSettings, payload.get("eval"), "eval"),
        cv=_section(CvSettings, payload.get("cv"), "cv"),
        sweep=_section(SweepSettings, payload.get("sweep"), "sweep"),
        output_dir=payload.get("output_dir", OUTPUT_DIR),
    )


def load_experiment(path: Optional[str]) -> ExperimentConfig:
    """Load a config file; ``None`` gives the defaults."""
    if path is None:
        return ExperimentConfig().validate()
    return experiment_from_dict(read_json(path)).validate()


def apply_overrides(config: ExperimentConfig, **overrides: Any) -> ExperimentConfig:
    """
    Apply CLI flag values (None means "not given") to a copy of ``config``.

    Recognized keys: seed, model, alpha, recon_scale, grid_size, repeats, out,
    sweep_axis, sweep_values, models, jobs is ignored here.
    """
    cfg = copy.deepcopy(config)
    dataset_changes = {}
    if overrides.get("seed") is not None:
        dataset_changes["seed"] = int(overrides["seed"])
    if overrides.get("alpha") is not None:
        dataset_changes["alpha"] = float(overrides["alpha"])
    if dataset_changes:
        cfg.dataset = replace(cfg.dataset, **dataset_changes)
    if overrides.get("model") is not None:
        cfg.model.kind = overrides["model"]
    if overrides.get("recon_scale") is not None:
        cfg.model.recon_scale = float(overrides["recon_scale"])
    if overrides.get("grid_size") is not None:
        cfg.eval.grid_size = int(overrides["grid_size"])
    if overrides.get("repeats") is not None:
        cfg.eval.repeat_runs = int(overrides["repeats"])
    if overrides.get("out") is not None:
        cfg.output_dir = overrides["out"]
    if overrides.get("sweep_axis") is not None:
        cfg.sweep.axis = overrides["sweep_axis"]
    if overrides.get("sweep_values") is not None:
        cfg.sweep.values = [float(v) for v in overrides["sweep_values"]]
    if overrides.get("models") is not None:
        cfg.sweep.models = list(overrides["models"])
    return cfg.validate()


def run_seed(master: int, run: int) -> int:
    """Seed of repeat run ``run``; only run-level randomness changes with it."""
    return derive_seed(master, "run", run)


def model_config(
    settings: ModelSettings,
    covariate_dim: int,
    seed: int,
    binary_covariates: bool = False,
    mc_samples: int = MC_SAMPLES_INFERENCE,
):
    """Build the config of one model run (presets must already be resolved)."""
    if settings.kind == "mlp":
        return MlpBaselineConfig(
            covariate_dim=covariate_dim,
            hidden_units=settings.hidden_units,
            hidden_layers=settings.hidden_layers,
            learning_rate=settings.learning_rate,
            epochs=settings.epochs,
            batch_size=settings.batch_size,
            seed=seed,
        )
    if settings.kind not in ("contivae", "contivae_n"):
        raise ValidationError(f"No trainable config for model kind '{settings.kind}'")
    return ContiVaeConfig(
        covariate_dim=covariate_dim,
        latent_dim=settings.latent_dim,
        hidden_units=settings.hidden_units,
        hidden_layers=settings.hidden_layers,
        tilt=settings.tilt,
        recon_scale=settings.recon_scale,
        prior_kind="tilted" if settings.kind == "contivae" else "normal",
        learning_rate=settings.learning_rate,
        epochs=settings.epochs,
        batch_size=settings.batch_size,
        seed=seed,
        mc_samples_inference=mc_samples,
        covariate_likelihood="bernoulli" if binary_covariates else "gaussian",
    )


def sweep_cell(config: ExperimentConfig, value: float, kind: str) -> ExperimentConfig:
    """Copy of ``config`` with one sweep axis value and model kind applied."""
    cfg = copy.deepcopy(config)
    axis = cfg.sweep.axis
    if axis == "alpha":
        cfg.dataset = replace(cfg.dataset, alpha=float(value))
    elif axis == "lambda":
        cfg.model.recon_scale = float(value)
    elif axis == "hidden_units":
        cfg.model.hidden_units = int(value)
    else:
        cfg.model.latent_dim = int(value)
    cfg.model.kind = kind
    return cfg.validate()
