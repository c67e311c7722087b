"""Evaluation of curve predictors against ground-truth oracles."""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from ..data.curves import GroundTruthOracle
from ..data.dataset import Dataset
from ..model.inference import dose_grid
from ..utils.config import CI_Z, GRID_SIZE
from ..utils.errors import ConfigurationError, ContractError
from .metrics import predicted_optimal_doses, root_dpe, root_mise
from .predictors import CurvePredictor

logger = logging.getLogger(__name__)

REPORT_COLUMNS = [
    "row_type", "run", "model_kind", "family", "style", "alpha", "seed",
    "grid_size", "rmise", "rdpe", "rmise_ci", "rdpe_ci", "single_run",
]


@dataclass
class CurveDump:
    """Predicted and true curves of the evaluated rows."""

    sample_ids: np.ndarray
    t_grid: np.ndarray
    true: np.ndarray
    pred: np.ndarray

    def to_frame(self) -> pd.DataFrame:
        n, g = self.true.shape
        return pd.DataFrame(
            {
                "sample_id": np.repeat(self.sample_ids, g),
                "t": np.tile(self.t_grid, n),
                "y_true": self.true.reshape(-1),
                "y_pred": self.pred.reshape(-1),
            }
        )


@dataclass
class EvalRow:
    """Metrics of one trained model on one test split."""

    run: int
    model_kind: str
    family: int
    style: str
    alpha: float
    seed: int
    grid_size: int
    rmise: float
    rdpe: float
    curves: Optional[CurveDump] = field(default=None, repr=False, compare=False)

    def to_record(self) -> Dict[str, Any]:
        return {
            "row_type": "run",
            "run": self.run,
            "model_kind": self.model_kind,
            "family": self.family,
            "style": self.style,
            "alpha": self.alpha,
            "seed": self.seed,
            "grid_size": self.grid_size,
            "rmise": self.rmise,
            "rdpe": self.rdpe,
            "rmise_ci": None,
            "rdpe_ci": None,
            "single_run": None,
        }


@dataclass
class EvalReport:
    """Run rows plus their mean and 95% confidence half-widths."""

    rows: List[EvalRow]
    rmise_mean: float
    rmise_ci: float
    rdpe_mean: float
    rdpe_ci: float
    single_run: bool

    @property
    def runs(self) -> int:
        return len(self.rows)

    def aggregate_record(self) -> Dict[str, Any]:
        first = self.rows[0]
        return {
            "row_type": "aggregate",
            "run": None,
            "model_kind": first.model_kind,
            "family": first.family,
            "style": first.style,
            "alpha": first.alpha,
            "seed": None,
            "grid_size": first.grid_size,
            "rmise": self.rmise_mean,
            "rdpe": self.rdpe_mean,
            "rmise_ci": self.rmise_ci,
            "rdpe_ci": self.rdpe_ci,
            "single_run": self.single_run,
        }

    def to_frame(self) -> pd.DataFrame:
        records = [row.to_record() for row in self.rows] + [self.aggregate_record()]
        frame = pd.DataFrame(records, columns=REPORT_COLUMNS)
        return frame.astype({"run": "Int64", "seed": "Int64"})


def evaluate_model(
    predictor: CurvePredictor,
    dataset: Dataset,
    oracle: Optional[GroundTruthOracle],
    grid_size: int = GRID_SIZE,
    run: int = 0,
    seed: int = 0,
    rows: Optional[np.ndarray] = None,
) -> EvalRow:
    """
    Score one predictor on the test rows of ``dataset``.

    True curves and true optimal doses come from the oracle (noise free, with
    the hidden confounders where the curve needs them). Observed outcomes are
    never used.

    Args:
        predictor: Model under evaluation
        dataset: Dataset whose ``test_idx`` (or ``rows``) is evaluated
        oracle: Ground truth of the dataset
        grid_size: Points of the dose grid on [0, 1]
        run: Repeat index recorded in the row
        seed: Run seed recorded in the row
        rows: Explicit row indices instead of the test split

    Returns:
        EvalRow with the curves attached

    Raises:
        ConfigurationError: If no ground truth is available
    """
    if oracle is None:
        raise ConfigurationError("Evaluation needs the dataset's ground truth")
    rows = dataset.test_idx if rows is None else np.asarray(rows, dtype=np.int64)
    if rows.size == 0:
        raise ContractError("Evaluation split is empty")
    grid = dose_grid(grid_size)
    x = dataset.x[rows]

    true = oracle.true_curves(x, grid, rows)
    pred = predictor.predict_curves(x, grid, rows)
    t_star, _ = oracle.optimal_doses(x, rows)
    t_hat, _ = predicted_optimal_doses(pred, grid)

    row = EvalRow(
        run=run,
        model_kind=predictor.kind,
        family=dataset.settings.family,
        style=dataset.settings.style,
        alpha=dataset.settings.alpha,
        seed=seed,
        grid_size=grid_size,
        rmise=root_mise(pred, true, grid),
        rdpe=root_dpe(
            oracle.values_at(x, t_star, rows), oracle.values_at(x, t_hat, rows)
        ),
        curves=CurveDump(rows.copy(), grid, true, pred),
    )
    logger.info(
        "%s run %d: sqrt(MISE)=%.4f sqrt(DPE)=%.4f",
        row.model_kind,
        run,
        row.rmise,
        row.rdpe,
    )
    return row


def _half_width(values: np.ndarray) -> float:
    if values.size < 2:
        return 0.0
    return CI_Z * float(np.std(values, ddof=1)) / math.sqrt(values.size)


def aggregate(rows: List[EvalRow]) -> EvalReport:
    """
    Mean and 95% CI half-width (1.96 * s / sqrt(n), sample std) per metric.

    A single run reports a half-width of 0 and sets ``single_run``.
    """
    if not rows:
        raise ContractError("aggregate needs at least one run")
    rmise = np.array([row.rmise for row in rows])
    rdpe = np.array([row.rdpe for row in rows])
    return EvalReport(
        rows=list(rows),
        rmise_mean=float(np.mean(rmise)),
        rmise_ci=_half_width(rmise),
        rdpe_mean=float(np.mean(rdpe)),
        rdpe_ci=_half_width(rdpe),
        single_run=len(rows) == 1,
    )
