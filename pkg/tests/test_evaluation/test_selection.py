"""Tests for k-fold model selection."""

from types import SimpleNamespace

import numpy as np
import pytest

from src.baselines.mlp import MlpBaselineConfig
from src.data.dataset import DatasetSettings
from src.data.generators import build_dataset
from src.evaluation import selection
from src.evaluation.selection import cross_validate
from src.model.config import ContiVaeConfig
from src.utils.errors import ContractError


@pytest.fixture(scope="module")
def small_data():
    return build_dataset(DatasetSettings(family=3, n=50, d_x=4, seed=2))


def fake_scores(monkeypatch, score_of):
    """Skip training; each fold scores ``score_of(config)``."""
    seen = []

    def fake_train(config, fold):
        seen.append(fold)
        return SimpleNamespace(config=config), None

    def fake_evaluate(predictor, fold, oracle, grid_size, run):
        return SimpleNamespace(rmise=score_of(predictor.config))

    monkeypatch.setattr(selection, "train_predictor", fake_train)
    monkeypatch.setattr(selection, "evaluate_model", fake_evaluate)
    return seen


class TestCrossValidate:
    """Test cases for cross_validate."""

    def test_lowest_score_wins(self, monkeypatch, small_data):
        dataset, oracle = small_data
        candidates = [
            ContiVaeConfig(covariate_dim=4, recon_scale=lam) for lam in (0.1, 0.5, 1.0)
        ]
        by_lambda = {0.1: 2.0, 0.5: 1.0, 1.0: 3.0}
        fake_scores(monkeypatch, lambda c: by_lambda[c.recon_scale])

        result = cross_validate(candidates, dataset, oracle, folds=3)

        assert result.best.recon_scale == 0.5
        assert result.scores == [2.0, 1.0, 3.0]

    def test_ties_prefer_fewer_parameters_then_lower_lambda(
        self, monkeypatch, small_data
    ):
        dataset, oracle = small_data
        candidates = [
            ContiVaeConfig(covariate_dim=4, hidden_units=16, recon_scale=0.1),
            ContiVaeConfig(covariate_dim=4, hidden_units=8, recon_scale=1.0),
            ContiVaeConfig(covariate_dim=4, hidden_units=8, recon_scale=0.5),
        ]
        fake_scores(monkeypatch, lambda c: 1.0)

        best = cross_validate(candidates, dataset, oracle, folds=2).best

        assert (best.hidden_units, best.recon_scale) == (8, 0.5)

    def test_folds_never_touch_the_test_split(self, monkeypatch, small_data):
        dataset, oracle = small_data
        seen = fake_scores(monkeypatch, lambda c: 1.0)
        candidates = [
            MlpBaselineConfig(covariate_dim=4, hidden_units=h) for h in (4, 8)
        ]

        cross_validate(candidates, dataset, oracle, folds=5)

        test_rows = set(dataset.test_idx.tolist())
        assert len(seen) == 10
        for fold in seen:
            assert not test_rows & set(fold.train_idx.tolist())
            assert not test_rows & set(fold.test_idx.tolist())
        # both candidates see the same folds
        np.testing.assert_array_equal(seen[0].test_idx, seen[5].test_idx)

    def test_single_candidate_skips_training(self, monkeypatch, small_data):
        dataset, oracle = small_data
        seen = fake_scores(monkeypatch, lambda c: 1.0)
        config = MlpBaselineConfig(covariate_dim=4)
        assert cross_validate([config], dataset, oracle).best is config
        assert seen == []

    def test_invalid_arguments(self, small_data):
        dataset, oracle = small_data
        with pytest.raises(ContractError):
            cross_validate([], dataset, oracle)
        with pytest.raises(ContractError):
            candidates = [MlpBaselineConfig(covariate_dim=4)] * 2
            cross_validate(candidates, dataset, oracle, folds=1)

    @pytest.mark.slow
    def test_real_training_picks_a_candidate(self, small_data):
        dataset, oracle = small_data
        candidates = [
            MlpBaselineConfig(covariate_dim=4, hidden_units=h, epochs=3) for h in (4, 8)
        ]
        result = cross_validate(candidates, dataset, oracle, folds=2, grid_size=9)
        assert result.best in candidates
        assert all(np.isfinite(result.scores))
