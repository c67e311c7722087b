"""K-fold model selection."""

import logging
from dataclasses import dataclass, field
from typing import Any, List, Sequence

import numpy as np

from ..data.curves import GroundTruthOracle
from ..data.dataset import Dataset
from ..data.generators import split
from ..utils.config import CV_FOLDS, GRID_SIZE
from ..utils.errors import ContractError
from ..utils.seeding import derive_seed, make_rng
from .evaluate import evaluate_model
from .predictors import config_parameter_count, train_predictor

logger = logging.getLogger(__name__)


@dataclass
class CvResult:
    best: Any
    scores: List[float] = field(default_factory=list)
    parameter_counts: List[int] = field(default_factory=list)


def _selection_key(score: float, config: Any):
    # Lower validation error, then fewer parameters, then lower lambda
    return (score, config_parameter_count(config), getattr(config, "recon_scale", 0.0))


def cross_validate(
    candidates: Sequence[Any],
    dataset: Dataset,
    oracle: GroundTruthOracle,
    folds: int = CV_FOLDS,
    seed: int = 0,
    grid_size: int = GRID_SIZE,
) -> CvResult:
    """
    Pick the candidate config with the lowest mean validation sqrt(MISE).

    Only the training split of ``dataset`` is folded; the test split is never
    touched. Every candidate sees the same folds.

    Args:
        candidates: ContiVAE or MLP configs
        dataset: Dataset whose ``train_idx`` is partitioned
        oracle: Ground truth used for validation curves
        folds: Fold count (>= 2)
        seed: Seed of the fold assignment

    Returns:
        The winning config with every candidate's mean score
    """
    if not candidates:
        raise ContractError("cross_validate needs at least one candidate config")
    if len(candidates) == 1:
        return CvResult(candidates[0])
    if folds < 2:
        raise ContractError(f"folds must be >= 2, got {folds}")

    pool = dataset.train_idx
    cv_rng = make_rng(derive_seed(seed, "cv"))
    fold_rows = [pool[f] for f in split(pool.size, cv_rng, fold_count=folds)]
    scores = []
    for index, config in enumerate(candidates):
        fold_scores = []
        for k, val_rows in enumerate(fold_rows):
            others = [rows for j, rows in enumerate(fold_rows) if j != k]
            fold = dataset.with_split(np.sort(np.concatenate(others)), val_rows)
            predictor, _ = train_predictor(config, fold)
            report = evaluate_model(predictor, fold, oracle, grid_size, run=k)
            fold_scores.append(report.rmise)
        scores.append(float(np.mean(fold_scores)))
        logger.info(
            "Candidate %d/%d: mean validation sqrt(MISE)=%.4f",
            index + 1,
            len(candidates),
            scores[-1],
        )

    best = min(
        range(len(candidates)),
        key=lambda i: _selection_key(scores[i], candidates[i]),
    )
    return CvResult(
        candidates[best],
        scores,
        [config_parameter_count(c) for c in candidates],
    )
