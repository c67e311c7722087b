"""Tests for data loading functionality."""

import json
import os

import numpy as np
import pandas as pd
import pytest

from src.data.dataset import DatasetSettings
from src.data.generators import build_dataset
from src.data.loaders import (
    DatasetLoader,
    DatasetWriter,
    covariate_columns,
    load_covariates_csv,
    load_ground_truth,
)
from src.utils.errors import ConfigurationError, DataIOError, ValidationError


@pytest.fixture
def written(tmp_path):
    settings = DatasetSettings(
        style="news", family=4, n=30, d_x=5, d_u=2, alpha=2.5, seed=8
    )
    dataset, oracle = build_dataset(settings)
    paths = DatasetWriter.write(dataset, oracle, str(tmp_path / "data"))
    return dataset, oracle, paths


class TestDatasetWriter:
    """Test cases for DatasetWriter."""

    def test_writes_three_files(self, written):
        _, _, paths = written
        assert set(paths) == {"dataset", "metadata", "ground_truth"}
        assert all(os.path.exists(p) for p in paths.values())

    def test_csv_has_no_hidden_columns(self, written):
        _, _, paths = written
        frame = pd.read_csv(paths["dataset"])
        assert list(frame.columns) == covariate_columns(5) + ["t", "y"]

    def test_skips_ground_truth_when_absent(self, written, tmp_path):
        dataset, _, _ = written
        paths = DatasetWriter.write(dataset, None, str(tmp_path / "bare"))
        assert "ground_truth" not in paths
        assert not os.path.exists(tmp_path / "bare" / "ground_truth.json")


class TestDatasetLoader:
    """Test cases for DatasetLoader."""

    def test_round_trip_is_exact(self, written):
        dataset, _, paths = written
        loaded = DatasetLoader.load(os.path.dirname(paths["dataset"]))

        np.testing.assert_array_equal(loaded.x, dataset.x)
        np.testing.assert_array_equal(loaded.t, dataset.t)
        np.testing.assert_array_equal(loaded.y, dataset.y)
        np.testing.assert_array_equal(loaded.test_idx, dataset.test_idx)
        assert loaded.settings == dataset.settings

    def test_load_by_csv_path(self, written):
        dataset, _, paths = written
        assert len(DatasetLoader.load(paths["dataset"])) == len(dataset)

    def test_missing_csv(self, tmp_path):
        with pytest.raises(DataIOError):
            DatasetLoader.load(str(tmp_path / "nowhere.csv"))

    def test_row_count_mismatch(self, written):
        _, _, paths = written
        frame = pd.read_csv(paths["dataset"])
        frame.iloc[:-1].to_csv(paths["dataset"], index=False)
        with pytest.raises(ValidationError, match="rows"):
            DatasetLoader.load(paths["dataset"])

    def test_covariate_count_mismatch(self, written):
        _, _, paths = written
        with open(paths["metadata"], encoding="utf-8") as handle:
            meta = json.load(handle)
        meta["d_x_columns"] = 4
        with open(paths["metadata"], "w", encoding="utf-8") as handle:
            json.dump(meta, handle)
        with pytest.raises(ValidationError):
            DatasetLoader.load(paths["dataset"])


class TestGroundTruth:
    """Test cases for load_ground_truth."""

    def test_oracle_round_trip(self, written):
        _, oracle, paths = written
        loaded = load_ground_truth(paths["dataset"])
        np.testing.assert_array_equal(loaded.hidden, oracle.hidden)
        np.testing.assert_array_equal(loaded.spec.params, oracle.spec.params)

    def test_missing_sidecar(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_ground_truth(str(tmp_path))


class TestLoadCovariatesCsv:
    """Test cases for load_covariates_csv."""

    def test_numeric_matrix(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("a,b\n0.5,1\n2,3\n")
        np.testing.assert_array_equal(
            load_covariates_csv(str(path)), [[0.5, 1.0], [2.0, 3.0]]
        )

    def test_file_not_found(self):
        with pytest.raises(DataIOError):
            load_covariates_csv("nonexistent.csv")

    @pytest.mark.parametrize(
        "content,message",
        [("a,b\n", "empty"), ("a,b\n1,x\n", "Non-numeric"), ("a,b\n1,\n", "missing")],
    )
    def test_rejects_bad_files(self, tmp_path, content, message):
        path = tmp_path / "x.csv"
        path.write_text(content)
        with pytest.raises(ValidationError, match=message):
            load_covariates_csv(str(path))
