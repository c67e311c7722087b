"""Reading and writing dataset files, ground truth and covariate matrices."""

import logging
import os
from typing import Dict, Optional

import numpy as np
import pandas as pd

from ..utils.config import DATASET_CSV, DATASET_META, GROUND_TRUTH
from ..utils.errors import ConfigurationError, DataIOError, ValidationError
from ..utils.files import ensure_dir, read_json, write_json
from .curves import GroundTruthOracle
from .dataset import Dataset, DatasetSettings

logger = logging.getLogger(__name__)

PARSE_ERRORS = (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError)


def covariate_columns(d_x: int):
    return [f"x_{i}" for i in range(d_x)]


def _dataset_dir(path: str) -> str:
    return path if os.path.isdir(path) else os.path.dirname(path) or "."


class DatasetWriter:
    """Write the model-visible files and the ground-truth sidecar."""

    @staticmethod
    def write(
        dataset: Dataset, oracle: Optional[GroundTruthOracle], out_dir: str
    ) -> Dict[str, str]:
        """
        Write ``dataset.csv``, ``dataset.meta.json`` and ``ground_truth.json``.

        Args:
            dataset: Dataset to write
            oracle: Ground truth; skipped when None
            out_dir: Target directory, created if missing

        Returns:
            Mapping from file role to path

        Raises:
            DataIOError: If a file cannot be written
        """
        ensure_dir(out_dir)
        paths = {
            "dataset": os.path.join(out_dir, DATASET_CSV),
            "metadata": os.path.join(out_dir, DATASET_META),
        }
        frame = pd.DataFrame(
            dataset.x, columns=covariate_columns(dataset.covariate_dim)
        )
        frame["t"] = dataset.t
        frame["y"] = dataset.y
        try:
            frame.to_csv(paths["dataset"], index=False)
        except OSError as e:
            raise DataIOError(f"Failed to write {paths['dataset']}: {e}") from e

        meta = dataset.settings.to_dict()
        meta.update(
            {
                "n_rows": len(dataset),
                "d_x_columns": dataset.covariate_dim,
                "train_idx": dataset.train_idx.tolist(),
                "test_idx": dataset.test_idx.tolist(),
            }
        )
        write_json(paths["metadata"], meta)

        if oracle is not None:
            paths["ground_truth"] = write_json(
                os.path.join(out_dir, GROUND_TRUTH), oracle.to_dict()
            )
        logger.debug("Wrote dataset files to %s", out_dir)
        return paths


class DatasetLoader:
    """Load the model-visible dataset files."""

    @staticmethod
    def load(path: str) -> Dataset:
        """
        Load a dataset from its directory or its CSV path.

        Args:
            path: Directory holding ``dataset.csv`` or the CSV itself

        Returns:
            Dataset with the stored split

        Raises:
            DataIOError: If a file is missing or unreadable
            ValidationError: If the CSV and its metadata disagree
        """
        csv_path = os.path.join(path, DATASET_CSV) if os.path.isdir(path) else path
        meta_path = os.path.join(_dataset_dir(csv_path), DATASET_META)
        if not os.path.exists(csv_path):
            raise DataIOError(f"Dataset CSV not found: {csv_path}")
        meta = read_json(meta_path)

        try:
            frame = pd.read_csv(csv_path, float_precision="round_trip")
        except PARSE_ERRORS as e:
            raise ValidationError(f"Failed to parse dataset CSV {csv_path}: {e}") from e

        d_x = int(meta.get("d_x_columns", -1))
        required = covariate_columns(d_x) + ["t", "y"] if d_x > 0 else ["t", "y"]
        missing = [col for col in required if col not in frame.columns]
        if missing:
            raise ValidationError(f"Missing required columns: {missing[:5]}")
        if len(frame.columns) != d_x + 2:
            raise ValidationError(
                f"{csv_path} has {len(frame.columns) - 2} covariate columns, "
                f"metadata says {d_x}"
            )
        if len(frame) != int(meta.get("n_rows", -1)):
            raise ValidationError(
                f"{csv_path} has {len(frame)} rows, metadata says {meta.get('n_rows')}"
            )

        settings_keys = set(DatasetSettings.__dataclass_fields__)
        settings = DatasetSettings.from_dict(
            {k: v for k, v in meta.items() if k in settings_keys}
        )
        return Dataset(
            frame[covariate_columns(d_x)].to_numpy(dtype=np.float64),
            frame["t"].to_numpy(dtype=np.float64),
            frame["y"].to_numpy(dtype=np.float64),
            np.asarray(meta["train_idx"], dtype=np.int64),
            np.asarray(meta["test_idx"], dtype=np.int64),
            settings,
        )


def load_ground_truth(path: str) -> GroundTruthOracle:
    """
    Load the ground-truth sidecar next to a dataset.

    Raises:
        ConfigurationError: If the sidecar is missing
    """
    gt_path = path
    if not path.endswith(".json"):
        gt_path = os.path.join(_dataset_dir(path), GROUND_TRUTH)
    if not os.path.exists(gt_path):
        raise ConfigurationError(f"Ground-truth sidecar not found: {gt_path}")
    try:
        return GroundTruthOracle.from_dict(read_json(gt_path))
    except (KeyError, TypeError) as e:
        raise ValidationError(f"Malformed ground truth in {gt_path}: {e}") from e


def load_covariates_csv(csv_path: str) -> np.ndarray:
    """
    Load a user-supplied covariate matrix (one row per unit, numeric columns only).

    Raises:
        DataIOError: If the file does not exist
        ValidationError: If the file is empty or has non-numeric columns
    """
    if not os.path.exists(csv_path):
        raise DataIOError(f"Covariate CSV not found: {csv_path}")
    try:
        frame = pd.read_csv(csv_path, float_precision="round_trip")
    except PARSE_ERRORS as e:
        raise ValidationError(f"Failed to load covariate CSV: {e}") from e
    if frame.empty:
        raise ValidationError(f"Covariate CSV is empty: {csv_path}")
    non_numeric = [
        c for c in frame.columns if not pd.api.types.is_numeric_dtype(frame[c])
    ]
    if non_numeric:
        raise ValidationError(f"Non-numeric covariate columns: {non_numeric[:5]}")
    if frame.isna().any().any():
        raise ValidationError(f"Covariate CSV has missing values: {csv_path}")
    return frame.to_numpy(dtype=np.float64)
