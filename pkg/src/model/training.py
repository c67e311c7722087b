"""Minibatch training loop shared by ContiVAE and the MLP baseline."""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..gradcore.optim import Adam, iterate_minibatches
from ..gradcore.tensor import ComputationTape, Tensor
from ..processing.normalization import OutcomeScaler
from ..utils.errors import ContractError, ValidationError
from ..utils.seeding import derive_seed, make_rng
from .contivae import LOSS_COMPONENTS, ContiVaeModel

logger = logging.getLogger(__name__)

BatchLoss = Callable[
    [np.ndarray, np.random.Generator, int, int], Tuple[Tensor, Dict[str, float]]
]


@dataclass
class TrainTrace:
    """Per-epoch loss totals; one row per completed epoch."""

    columns: Tuple[str, ...] = ("total",) + LOSS_COMPONENTS
    rows: List[Dict[str, float]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rows)

    def append(self, epoch: int, values: Dict[str, float]) -> None:
        row = {"epoch": epoch}
        row.update({name: float(values[name]) for name in self.columns})
        self.rows.append(row)

    def extend(self, other: "TrainTrace") -> None:
        self.rows.extend(other.rows)

    def column(self, name: str) -> np.ndarray:
        return np.array([row[name] for row in self.rows], dtype=np.float64)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=["epoch"] + list(self.columns))

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> "TrainTrace":
        columns = tuple(c for c in frame.columns if c != "epoch")
        trace = cls(columns=columns)
        for record in frame.to_dict(orient="records"):
            trace.append(int(record["epoch"]), record)
        return trace


def epoch_rng(seed: int, epoch: int) -> np.random.Generator:
    """Stream for one epoch's shuffle and reparameterization noise."""
    return make_rng(derive_seed(seed, "shuffle", epoch))


def run_epochs(
    optimizer: Adam,
    n: int,
    batch_size: int,
    seed: int,
    start_epoch: int,
    epochs: int,
    batch_loss: BatchLoss,
    columns: Sequence[str],
    label: str,
) -> TrainTrace:
    """
    Run epochs ``start_epoch .. epochs - 1`` of minibatch Adam.

    Each epoch draws its own generator from ``(seed, epoch)``, so a resumed run
    sees the same shuffles as an uninterrupted one.

    Args:
        optimizer: Adam over the trainable tensors
        n: Number of training rows
        batch_size: Rows per step
        seed: Run seed
        start_epoch: First epoch to run (epochs already completed)
        epochs: Total epoch count
        batch_loss: ``(rows, rng, epoch, batch) -> (scalar loss, components)``
        columns: Component names accumulated into the trace, ``total`` first
        label: Model name for log lines

    Returns:
        Trace with one row per epoch run here
    """
    if n < 1:
        raise ContractError("Training needs a non-empty dataset")
    trace = TrainTrace(columns=tuple(columns))
    for epoch in range(start_epoch, epochs):
        rng = epoch_rng(seed, epoch)
        sums = dict.fromkeys(columns, 0.0)
        for batch, rows in enumerate(iterate_minibatches(n, batch_size, rng)):
            with ComputationTape() as tape:
                total, components = batch_loss(rows, rng, epoch, batch)
            optimizer.zero_grad()
            tape.backward(total)
            optimizer.step()
            sums["total"] += total.item()
            for name in columns[1:]:
                sums[name] += components[name]
        trace.append(epoch, sums)
        logger.info(
            "%s epoch %d/%d: %s",
            label,
            epoch + 1,
            epochs,
            " ".join(f"{name}={sums[name]:.4f}" for name in columns),
        )
    return trace


def standardize_outcomes(model, y: np.ndarray) -> np.ndarray:
    """Fit ``model.outcome_scaler`` on first use and map ``y`` onto its scale."""
    if y.size == 0:
        raise ContractError("Training needs a non-empty dataset")
    if model.outcome_scaler is None:
        model.outcome_scaler = OutcomeScaler.fit(y)
        logger.debug(
            "Outcome scaler: center=%.6g scale=%.6g",
            model.outcome_scaler.center,
            model.outcome_scaler.scale,
        )
    return model.outcome_scaler.transform(y)


def train(
    model: ContiVaeModel,
    dataset,
    recon_scale: Optional[float] = None,
    epochs: Optional[int] = None,
) -> TrainTrace:
    """
    Fit ``model`` in place on the training split of ``dataset``.

    Continues from ``model.epochs_completed``, so a model restored from a
    checkpoint resumes where it stopped. The first call fixes the model's
    outcome scaler from the training rows; the networks only ever see
    standardized outcomes.

    Args:
        model: Model to train
        dataset: ``Dataset``; only its training rows of (x, t, y) are read
        recon_scale: Override of ``config.recon_scale`` (lambda); 0 disables recon_x
        epochs: Override of ``config.epochs``

    Returns:
        Trace of the epochs run by this call

    Raises:
        NumericError: With component, epoch and batch when a loss term is not finite
    """
    cfg = model.config
    scale = cfg.recon_scale if recon_scale is None else float(recon_scale)
    if not 0.0 <= scale <= 1.0:
        raise ValidationError(f"recon_scale must lie in [0, 1], got {scale}")
    total_epochs = cfg.epochs if epochs is None else int(epochs)
    x, t, y = dataset.train_arrays()
    if x.shape[1] != cfg.covariate_dim:
        raise ValidationError(
            f"Dataset has {x.shape[1]} covariates, model expects {cfg.covariate_dim}"
        )
    y = standardize_outcomes(model, y)

    def batch_loss(rows, rng, epoch, batch):
        result = model.loss(x[rows], t[rows], y[rows], scale, rng, epoch, batch)
        return result.total, result.components

    trace = run_epochs(
        model.optimizer,
        x.shape[0],
        cfg.batch_size,
        cfg.seed,
        model.epochs_completed,
        total_epochs,
        batch_loss,
        ("total",) + LOSS_COMPONENTS,
        cfg.model_kind,
    )
    model.epochs_completed = max(model.epochs_completed, total_epochs)
    return trace
