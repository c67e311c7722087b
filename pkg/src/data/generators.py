"""Semi-synthetic data generation: covariates, confounders, doses and outcomes."""

import logging
from typing import List, Optional, Tuple, Union

import numpy as np
from scipy.special import expit

from ..distributions.beta import sample_beta_many
from ..processing.normalization import normalize_covariates
from ..utils.errors import ContractError, ValidationError
from ..utils.seeding import derive_seed, make_rng
from .curves import (
    CurveSpec,
    GroundTruthOracle,
    eval_curve_at,
    make_curve_spec,
    optimal_doses,
)
from .dataset import Dataset, DatasetSettings
from .loaders import load_covariates_csv

logger = logging.getLogger(__name__)


def gen_covariates(
    n: int,
    d_x: int,
    kind: str = "unit_norm_uniform",
    rng: Optional[np.random.Generator] = None,
    path: Optional[str] = None,
) -> np.ndarray:
    """
    Produce a covariate matrix with unit-norm rows.

    Args:
        n: Number of rows
        d_x: Number of features
        kind: ``unit_norm_uniform`` (U[0, 1] entries) or ``csv`` (first n rows
            of ``path``)
        rng: Generator for the uniform kind
        path: CSV file for the csv kind

    Returns:
        Matrix of shape ``(n, d_x)``, min-max scaled per feature then row-normalized
    """
    if n < 1 or d_x < 1:
        raise ContractError(f"gen_covariates needs n, d_x >= 1, got {n}, {d_x}")
    if kind == "unit_norm_uniform":
        if rng is None:
            raise ContractError("unit_norm_uniform covariates need an rng")
        raw = rng.random((n, d_x))
    elif kind == "csv":
        if path is None:
            raise ContractError("csv covariates need a path")
        raw = load_covariates_csv(path)
        if raw.shape[1] != d_x:
            raise ValidationError(
                f"{path} has {raw.shape[1]} covariate columns, expected {d_x}"
            )
        if raw.shape[0] < n:
            raise ValidationError(f"{path} has {raw.shape[0]} rows, {n} requested")
        raw = raw[:n]
    else:
        raise ValidationError(f"Unknown covariate kind '{kind}'")
    return normalize_covariates(raw)


def gen_hidden_confounders(
    n: int,
    d_u: int,
    d_x: int,
    proxy_noise_sd: float,
    rng: np.random.Generator,
    binary: bool = False,
    return_raw: bool = False,
) -> Union[Tuple[np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """
    Draw hidden confounders and the proxy covariates they drive.

    u ~ N(0, I), x = softplus(A u + eta) with a fixed A whose entries have
    standard deviation 1 / sqrt(d_u), then min-max and row normalization.
    With ``binary`` each feature is instead a Bernoulli(sigmoid(A u + eta))
    presence flag, left unnormalized.

    Returns:
        ``(U, X)``, plus the pre-normalization features when ``return_raw``
    """
    if n < 1 or d_u < 1 or d_x < 1:
        raise ContractError(
            f"gen_hidden_confounders needs positive dims, got {n}, {d_u}, {d_x}"
        )
    u = rng.standard_normal((n, d_u))
    a = rng.normal(0.0, 1.0 / np.sqrt(d_u), size=(d_x, d_u))
    logits = u @ a.T + proxy_noise_sd * rng.standard_normal((n, d_x))
    if binary:
        raw = (rng.random((n, d_x)) < expit(logits)).astype(np.float64)
        x = raw
    else:
        raw = np.logaddexp(0.0, logits)
        x = normalize_covariates(raw)
    return (u, x, raw) if return_raw else (u, x)


def assign_and_observe(
    spec: CurveSpec,
    x: np.ndarray,
    u: Optional[np.ndarray],
    alpha: float,
    noise_sd: float,
    rng: np.random.Generator,
    settings: Optional[DatasetSettings] = None,
) -> Dataset:
    """
    Assign Beta-skewed doses around each row's optimal dose and observe noisy outcomes.

    t_i ~ Beta(alpha, beta_i) with mode t*_i and
    y_i = curve(x_i, u_i, t_i) + N(0, noise_sd^2).
    Every row starts in the training split.
    """
    if alpha < 1.0:
        raise ContractError(f"Dosage skew alpha must be >= 1, got {alpha}")
    doses, agrees = optimal_doses(spec, x, u)
    logger.info(
        "Optimal doses: analytic rule agrees with the grid on %.1f%% of %d rows",
        100.0 * float(np.mean(agrees)),
        agrees.size,
    )
    t = sample_beta_many(alpha, doses, rng)
    y = eval_curve_at(spec, x, u, t) + noise_sd * rng.standard_normal(t.shape[0])
    n = t.shape[0]
    if settings is None:
        settings = DatasetSettings(n=max(n, 2), d_x=x.shape[1])
    return Dataset(x, t, y, np.arange(n), np.array([], dtype=np.int64), settings)


def split(
    data: Union[Dataset, int],
    rng: np.random.Generator,
    test_frac: float = 0.2,
    fold_count: Optional[int] = None,
) -> Union[Tuple[np.ndarray, np.ndarray], List[np.ndarray]]:
    """
    Partition row indices.

    Args:
        data: Dataset or row count
        rng: Permutation stream
        test_frac: Test share for a train/test split
        fold_count: When given, return this many folds instead

    Returns:
        ``(train_idx, test_idx)`` or a list of ``fold_count`` sorted index arrays
    """
    n = data if isinstance(data, (int, np.integer)) else len(data)
    order = rng.permutation(int(n))
    if fold_count is not None:
        if not 2 <= fold_count <= n:
            raise ValidationError(f"fold_count must lie in [2, {n}], got {fold_count}")
        return [np.sort(fold) for fold in np.array_split(order, fold_count)]
    if not 0.0 < test_frac < 1.0:
        raise ValidationError(f"test_frac must lie in (0, 1), got {test_frac}")
    n_test = min(max(int(round(test_frac * n)), 1), n - 1)
    return np.sort(order[n_test:]), np.sort(order[:n_test])


def build_dataset(
    settings: DatasetSettings,
) -> Tuple[Dataset, GroundTruthOracle]:
    """
    Generate a full benchmark dataset from its settings.

    The ``datagen`` stream draws covariates, confounders, curve parameters,
    doses and noise; the ``split`` stream draws the train/test partition.

    Returns:
        The dataset and the oracle holding the curve and hidden confounders
    """
    rng = make_rng(derive_seed(settings.seed, "datagen"))
    if settings.covariates == "proxy":
        u, x = gen_hidden_confounders(
            settings.n, settings.d_u, settings.d_x, settings.proxy_noise_sd, rng,
            binary=settings.binary_covariates,
        )
    else:
        x = gen_covariates(
            settings.n, settings.d_x, settings.covariates, rng, settings.covariates_path
        )
        u = None
        if settings.style == "news":
            u = rng.standard_normal((settings.n, settings.d_u))

    spec = make_curve_spec(
        settings.family,
        settings.style,
        settings.d_x,
        settings.d_u,
        x,
        u,
        settings.scale,
        rng,
    )
    dataset = assign_and_observe(
        spec, x, u, settings.alpha, settings.noise_sd, rng, settings
    )
    split_rng = make_rng(derive_seed(settings.seed, "split"))
    train_idx, test_idx = split(settings.n, split_rng, settings.test_fraction)
    logger.info(
        "Generated %s family %d dataset: n=%d, d_x=%d, alpha=%.2f (%d train / %d test)",
        settings.style, settings.family, settings.n, settings.d_x, settings.alpha,
        train_idx.size, test_idx.size,
    )
    oracle = GroundTruthOracle(spec, u, settings.seed)
    return dataset.with_split(train_idx, test_idx), oracle
