"""End-to-end tests for the command-line surface."""

import json
import os
import warnings

import numpy as np
import pandas as pd
import pytest

from src.evaluation.evaluate import REPORT_COLUMNS
from src.main import build_parser, checkpoint_paths, concat_cell_frames, main
from src.utils.errors import DataIOError, NumericError
from src.utils.experiment import load_experiment

SMALL = {
    "dataset": {"style": "tcga", "family": 3, "n": 40, "d_x": 4, "seed": 1},
    "model": {"latent_dim": 2, "hidden_units": 4, "epochs": 1, "batch_size": 16},
    "eval": {"grid_size": 9, "mc_samples": 3, "repeat_runs": 2, "folds": 2},
    "cv": {"recon_scales": [0.5, 1.0]},
}


@pytest.fixture
def workspace(tmp_path):
    """Small config file plus a generated dataset in ``tmp_path/data``."""
    config = tmp_path / "experiment.json"
    config.write_text(json.dumps(SMALL))
    data = tmp_path / "data"
    assert main(["generate", "--config", str(config), "--out", str(data)]) == 0
    return str(config), str(data), tmp_path


def read(path):
    with open(path, "rb") as handle:
        return handle.read()


def train(config, data, runs, *extra):
    return main(["train", "--config", config, "--data", data, "--out", runs, *extra])


def evaluate(config, data, runs):
    args = ["--config", config, "--data", data, "--checkpoint", runs, "--out", runs]
    return main(["evaluate"] + args)


class TestParser:
    """Test cases for argument parsing."""

    def test_lambda_flag(self):
        args = build_parser().parse_args(["train", "--lambda", "0.1", "--resume"])
        assert args.recon_scale == 0.1
        assert args.resume

    def test_unknown_model_rejected(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["train", "--model", "gan"])


class TestGenerate:
    """Test cases for the generate command."""

    def test_writes_dataset_files(self, workspace):
        _, data, _ = workspace
        names = ("dataset.csv", "dataset.meta.json", "ground_truth.json")
        for name in names + ("manifest.generate.json",):
            assert os.path.exists(os.path.join(data, name))

    def test_rerun_is_byte_identical(self, workspace):
        config, data, _ = workspace
        before = {name: read(os.path.join(data, name)) for name in os.listdir(data)}
        assert main(["generate", "--config", config, "--out", data]) == 0
        after = {name: read(os.path.join(data, name)) for name in os.listdir(data)}
        assert before == after

    def test_invalid_alpha_writes_nothing(self, tmp_path):
        out = tmp_path / "never"
        assert main(["generate", "--alpha", "0.5", "--out", str(out)]) == 2
        assert not out.exists()

    def test_manifest_contents(self, workspace):
        _, data, _ = workspace
        path = os.path.join(data, "manifest.generate.json")
        with open(path, encoding="utf-8") as handle:
            manifest = json.load(handle)
        assert manifest["command"] == "generate"
        assert manifest["seed"] == 1
        assert manifest["config"]["dataset"]["n"] == 40
        assert "dataset.csv" in manifest["outputs"]


class TestTrainEvaluate:
    """Test cases for train and evaluate."""

    def test_contivae_runs(self, workspace):
        config, data, tmp_path = workspace
        runs = str(tmp_path / "runs")
        assert train(config, data, runs) == 0
        trace = pd.read_csv(os.path.join(runs, "run_1", "trace.csv"))
        assert len(trace) == 1

        assert evaluate(config, data, runs) == 0
        report = pd.read_csv(os.path.join(runs, "report.csv"))
        assert list(report.columns) == REPORT_COLUMNS
        assert list(report["row_type"]) == ["run", "run", "aggregate"]
        assert os.path.exists(os.path.join(runs, "curves.csv"))
        assert os.path.exists(os.path.join(runs, "report.txt"))

    def test_normal_prior_recorded_in_checkpoint(self, workspace):
        config, data, tmp_path = workspace
        runs = str(tmp_path / "runs_n")
        assert train(config, data, runs, "--model", "contivae_n", "--repeats", "1") == 0
        path = os.path.join(runs, "run_0", "checkpoint.json")
        with open(path, encoding="utf-8") as handle:
            assert json.load(handle)["kind"] == "contivae_n"

    def test_oracle_scores_zero(self, workspace):
        config, data, tmp_path = workspace
        runs = str(tmp_path / "oracle")
        assert train(config, data, runs, "--model", "oracle") == 0
        assert evaluate(config, data, runs) == 0
        report = pd.read_csv(os.path.join(runs, "report.csv"))
        assert (report["rmise"] == 0.0).all()
        assert set(report["model_kind"]) == {"oracle"}

    def test_resume_extends_training(self, workspace):
        config, data, tmp_path = workspace
        runs = str(tmp_path / "mlp")
        assert train(config, data, runs, "--model", "mlp", "--repeats", "1") == 0

        longer = tmp_path / "longer.json"
        model = {**SMALL["model"], "epochs": 3}
        longer.write_text(json.dumps({**SMALL, "model": model}))
        extra = ("--model", "mlp", "--repeats", "1", "--resume")
        assert train(str(longer), data, runs, *extra) == 0
        assert len(pd.read_csv(os.path.join(runs, "run_0", "trace.csv"))) == 3

    def test_resume_rejects_changed_config(self, workspace):
        config, data, tmp_path = workspace
        runs = str(tmp_path / "vae")
        assert train(config, data, runs, "--repeats", "1") == 0
        extra = ("--repeats", "1", "--resume", "--lambda", "0.1")
        assert train(config, data, runs, *extra) == 2

    def test_missing_dataset(self, tmp_path):
        args = ["--data", str(tmp_path / "absent"), "--out", str(tmp_path / "o")]
        assert main(["train"] + args) == 3

    def test_missing_ground_truth(self, workspace):
        config, data, tmp_path = workspace
        runs = str(tmp_path / "gt")
        assert train(config, data, runs, "--model", "oracle") == 0
        os.remove(os.path.join(data, "ground_truth.json"))
        assert evaluate(config, data, runs) == 2

    def test_evaluate_rejects_other_dataset(self, workspace):
        config, data, tmp_path = workspace
        runs = str(tmp_path / "runs")
        other = str(tmp_path / "other")
        assert train(config, data, runs, "--model", "mlp") == 0
        regenerate = ["generate", "--config", config, "--out", other, "--seed", "9"]
        assert main(regenerate) == 0
        assert evaluate(config, other, runs) == 2

    def test_shared_output_directory_keeps_every_manifest(self, tmp_path):
        config = tmp_path / "experiment.json"
        config.write_text(json.dumps(SMALL))
        out = str(tmp_path / "shared")
        commands = ("generate", "train", "evaluate")
        for command in commands:
            assert main([command, "--config", str(config), "--out", out]) == 0

        for command in commands:
            path = os.path.join(out, f"manifest.{command}.json")
            with open(path, encoding="utf-8") as handle:
                assert json.load(handle)["command"] == command
        with open(os.path.join(out, "manifest.train.json"), encoding="utf-8") as f:
            assert "dataset_hash" in json.load(f)


class TestSweep:
    """Test cases for the sweep command."""

    def test_alpha_sweep_row_count(self, workspace):
        config, _, tmp_path = workspace
        out = str(tmp_path / "sweep")
        args = ["--config", config, "--out", out, "--sweep-axis", "alpha"]
        plan = ["--sweep-values", "1", "2", "3", "4", "--models", "contivae", "mlp"]
        assert main(["sweep"] + args + plan) == 0

        runs = pd.read_csv(os.path.join(out, "sweep_runs.csv"))
        summary = pd.read_csv(os.path.join(out, "sweep_summary.csv"))
        assert len(runs) == 16
        assert len(summary) == 8
        assert list(runs.columns[:2]) == ["axis", "axis_value"]
        assert len(os.listdir(os.path.join(out, "cells"))) == 8

    def test_completed_cells_are_skipped(self, workspace, monkeypatch):
        config, _, tmp_path = workspace
        out = str(tmp_path / "sweep")
        args = ["sweep", "--config", config, "--out", out]
        args += ["--sweep-values", "1", "2", "--models", "mlp"]
        assert main(args) == 0
        runs_path = os.path.join(out, "sweep_runs.csv")
        first = pd.read_csv(runs_path)

        def no_rebuild(settings):
            raise AssertionError("cell was recomputed")

        monkeypatch.setattr("src.main.build_dataset", no_rebuild)
        assert main(args) == 0
        pd.testing.assert_frame_equal(pd.read_csv(runs_path), first)

    def test_failed_cells_are_recorded(self, workspace, monkeypatch):
        config, _, tmp_path = workspace
        out = str(tmp_path / "sweep")
        from src import main as main_module

        real_train = main_module.train_predictor

        def flaky_train(model_cfg, dataset):
            if model_cfg.model_kind == "mlp":
                raise NumericError("loss is nan", component="mse")
            return real_train(model_cfg, dataset)

        monkeypatch.setattr(main_module, "train_predictor", flaky_train)
        args = ["sweep", "--config", config, "--out", out, "--sweep-values", "1"]
        with warnings.catch_warnings():
            warnings.simplefilter("error", FutureWarning)
            assert main(args + ["--models", "contivae", "mlp", "--repeats", "1"]) == 0

        runs = pd.read_csv(os.path.join(out, "sweep_runs.csv"), keep_default_na=False)
        failed = runs[runs["row_type"] == "failed"]
        assert list(failed["model_kind"]) == ["mlp"]
        assert "NumericError" in failed["error"].iloc[0]
        assert len(os.listdir(os.path.join(out, "cells"))) == 1


class TestConcatCellFrames:
    """Test cases for concat_cell_frames."""

    def test_empty_metrics_of_failed_cell_keep_float_dtype(self):
        done = pd.DataFrame({"row_type": ["aggregate"], "rmise": [1.5], "error": [""]})
        failed = pd.DataFrame(
            {"row_type": ["failed"], "rmise": [None], "error": ["NumericError"]}
        )

        with warnings.catch_warnings():
            warnings.simplefilter("error")
            combined = concat_cell_frames([done, failed])

        assert list(combined.columns) == ["row_type", "rmise", "error"]
        assert combined["rmise"].dtype == np.float64
        assert np.isnan(combined.loc[1, "rmise"])
        assert combined.loc[1, "error"] == "NumericError"

    def test_column_only_in_later_frame_is_kept_in_order(self):
        a = pd.DataFrame({"axis": ["alpha"], "rmise": [1.0]})
        b = pd.DataFrame({"axis": ["alpha"], "rmise": [2.0], "rdpe": [0.5]})

        combined = concat_cell_frames([a, b])

        assert list(combined.columns) == ["axis", "rmise", "rdpe"]
        assert np.isnan(combined.loc[0, "rdpe"])


class TestCrossValidation:
    """Test cases for the cv command."""

    def test_writes_loadable_best_config(self, workspace):
        config, data, tmp_path = workspace
        out = str(tmp_path / "cv")
        assert main(["cv", "--config", config, "--data", data, "--out", out]) == 0

        best = load_experiment(os.path.join(out, "best_config.json"))
        assert best.model.recon_scale in (0.5, 1.0)
        scores = pd.read_csv(os.path.join(out, "cv_scores.csv"))
        assert len(scores) == 2
        assert scores["selected"].sum() == 1

    def test_oracle_cannot_be_cross_validated(self, workspace):
        config, data, tmp_path = workspace
        out = str(tmp_path / "cv")
        args = ["--config", config, "--data", data, "--out", out, "--model", "oracle"]
        assert main(["cv"] + args) == 2


class TestCheckpointPaths:
    """Test cases for checkpoint_paths."""

    def test_run_directories_in_order(self, tmp_path):
        for run in (10, 2):
            (tmp_path / f"run_{run}").mkdir()
            (tmp_path / f"run_{run}" / "checkpoint.json").write_text("{}")
        assert [run for run, _ in checkpoint_paths(str(tmp_path))] == [2, 10]

    def test_nothing_found(self, tmp_path):
        with pytest.raises(DataIOError):
            checkpoint_paths(str(tmp_path))
