"""Tests for curve families, optimal doses and the ground-truth oracle."""

import numpy as np
import pytest

from src.data.curves import (
    DOSE_AGREEMENT_TOL,
    CurveSpec,
    GroundTruthOracle,
    analytic_optimal_doses,
    eval_curve,
    eval_curve_batch,
    grid_optimal_doses,
    make_curve_spec,
    optimal_dose,
    optimal_doses,
    projections,
)
from src.utils.errors import (
    ContractError,
    DegenerateCurveError,
    DimensionError,
    ValidationError,
)
from src.utils.seeding import make_rng


def identity_spec(family, scale=10.0):
    """tcga-style spec whose projections are the covariates themselves."""
    return CurveSpec(family, "tcga", np.eye(3), scale)


class TestCurveValues:
    """Hand-computed curve values."""

    def test_family_three(self):
        # 10 * (1 + 12*2*0.5 - 12*3*0.25)
        value = eval_curve(identity_spec(3), np.array([1.0, 2.0, 3.0]), None, 0.5)
        assert value == pytest.approx(40.0)

    def test_family_one(self):
        # k = 0.75 * 2 / 1 = 1.5; 10 * (0 + 12 * 0.5 * (0.5 - 1.5)^2)
        value = eval_curve(identity_spec(1), np.array([0.0, 2.0, 1.0]), None, 0.5)
        assert value == pytest.approx(60.0)

    def test_family_two(self):
        spec = identity_spec(2, scale=1.0)
        value = eval_curve(spec, np.array([0.5, 1.0, 2.0]), None, 1.0)
        assert value == pytest.approx(0.5 + np.sin(np.pi / 2))

    def test_family_four(self):
        spec = identity_spec(4, scale=1.0)
        value = eval_curve(spec, np.array([0.0, 0.5, 0.25]), None, 0.25)
        assert value == pytest.approx(np.cos(np.pi * 0.5 + 0.5 * np.pi) + 0.25)

    def test_news_projection(self):
        rng = np.random.default_rng(0)
        params = rng.normal(size=(3, 2, 4))
        x, u = rng.normal(size=(5, 4)), rng.normal(size=(5, 2))
        w = projections(CurveSpec(3, "news", params), x, u)
        np.testing.assert_allclose(w[:, 1], [u[i] @ params[1] @ x[i] for i in range(5)])

    def test_batch_matches_pointwise(self):
        spec = identity_spec(4)
        x = np.random.default_rng(1).uniform(size=(3, 3))
        grid = np.linspace(0.0, 1.0, 5)
        batch = eval_curve_batch(spec, x, None, grid)
        assert batch[2, 3] == pytest.approx(eval_curve(spec, x[2], None, grid[3]))

    def test_dose_outside_unit_interval(self):
        with pytest.raises(ContractError):
            eval_curve(identity_spec(3), np.ones(3), None, 1.5)

    def test_news_needs_hidden(self):
        spec = CurveSpec(1, "news", np.ones((3, 2, 4)))
        with pytest.raises(ContractError, match="hidden"):
            projections(spec, np.ones((1, 4)))

    def test_covariate_width(self):
        with pytest.raises(DimensionError):
            projections(identity_spec(1), np.ones((2, 4)))

    def test_invalid_spec(self):
        with pytest.raises(ValidationError):
            CurveSpec(5, "tcga", np.eye(3))
        with pytest.raises(DimensionError):
            CurveSpec(1, "news", np.eye(3))


class TestOptimalDoses:
    """Analytic case rules against the dense grid."""

    @pytest.mark.parametrize(
        "family,w,dose",
        [
            (1, [0.0, 2.0, 1.0], 0.5),
            (1, [0.0, 0.5, 1.0], 1.0),
            (1, [0.0, -1.0, 1.0], 1.0),
            (2, [0.0, 1.0, 1.0], 0.5),
            (2, [0.0, 1.0, 0.6], 0.3),
            (3, [0.0, 1.0, 2.0], 0.25),
            (3, [0.0, 3.0, 1.0], 1.0),
            (3, [0.0, -1.0, 1.0], 0.0),
            (3, [0.0, 1.0, -1.0], 1.0),
            (2, [0.0, -2.0, 1.0], 0.75),
            (2, [0.0, -0.5, 1.0], 0.0),
            (4, [0.0, 0.5, 0.0], 0.75),
            (4, [0.5, -0.5, 0.0], 0.2),
            (4, [0.0, 0.0, 0.0], 0.0),
        ],
    )
    def test_hand_cases(self, family, w, dose):
        analytic = analytic_optimal_doses(family, np.array([w]))
        grid = grid_optimal_doses(identity_spec(family), np.array([w]))

        assert analytic[0] == pytest.approx(dose)
        assert abs(grid[0] - dose) <= DOSE_AGREEMENT_TOL

    def test_grid_is_authoritative_on_disagreement(self, monkeypatch):
        monkeypatch.setattr(
            "src.data.curves.analytic_optimal_doses",
            lambda family, w: np.full(len(w), 0.9),
        )
        doses, agrees = optimal_doses(identity_spec(3), np.array([[0.0, 1.0, 2.0]]))

        assert not agrees[0]
        assert doses[0] == pytest.approx(0.25, abs=DOSE_AGREEMENT_TOL)

    def test_equal_crests_resolve_to_smallest_dose(self):
        # cos(2 pi t) peaks at both ends of [0, 1]
        doses, agrees = optimal_doses(identity_spec(4), np.zeros((1, 3)))
        assert doses[0] == 0.0
        assert agrees[0]

    def test_single_row(self):
        dose = optimal_dose(identity_spec(3), np.array([0.0, 1.0, 2.0]))
        assert dose == pytest.approx(0.25)

    @pytest.mark.parametrize("family", [1, 2, 3, 4])
    def test_analytic_matches_grid_on_random_draws(self, family):
        rng = np.random.default_rng(family)
        x = rng.random((2000, 8))
        x /= np.linalg.norm(x, axis=1, keepdims=True)
        spec = make_curve_spec(family, "tcga", 8, 10, x, None, 10.0, rng)

        doses, agrees = optimal_doses(spec, x)

        assert agrees.mean() >= 0.95
        assert np.all((doses >= 0.0) & (doses <= 1.0))
        np.testing.assert_array_equal(
            doses[~agrees], grid_optimal_doses(spec, x[~agrees])
        )


class TestMakeCurveSpec:
    """Test cases for parameter sampling."""

    def test_tcga_vectors_are_unit_norm(self):
        rng = np.random.default_rng(0)
        spec = make_curve_spec(3, "tcga", 6, 10, np.ones((2, 6)), None, 10.0, rng)
        np.testing.assert_allclose(np.linalg.norm(spec.params, axis=1), np.ones(3))

    def test_news_shape(self):
        rng = np.random.default_rng(0)
        x, u = rng.random((4, 6)), rng.normal(size=(4, 3))
        spec = make_curve_spec(2, "news", 6, 3, x, u, 10.0, rng)
        assert spec.params.shape == (3, 3, 6)

    def test_degenerate_denominator_gives_up(self):
        # x = 0 forces w3 = 0 on every draw
        with pytest.raises(DegenerateCurveError):
            make_curve_spec(1, "tcga", 3, 10, np.zeros((2, 3)), None, 10.0, make_rng(0))

    def test_degenerate_denominator_irrelevant_for_family_three(self):
        x = np.zeros((2, 3))
        spec = make_curve_spec(3, "tcga", 3, 10, x, None, 10.0, make_rng(0))
        assert spec.family == 3


class TestGroundTruthOracle:
    """Test cases for GroundTruthOracle."""

    def test_serialization_preserves_curves(self):
        rng = np.random.default_rng(2)
        x, u = rng.random((6, 4)), rng.normal(size=(6, 2))
        spec = CurveSpec(4, "news", rng.normal(size=(3, 2, 4)))
        oracle = GroundTruthOracle(spec, u, seed=9)

        restored = GroundTruthOracle.from_dict(oracle.to_dict())
        grid = np.linspace(0, 1, 7)

        np.testing.assert_array_equal(
            restored.true_curves(x, grid), oracle.true_curves(x, grid)
        )
        assert restored.seed == 9

    def test_row_selection_uses_matching_confounders(self):
        rng = np.random.default_rng(3)
        x, u = rng.random((5, 4)), rng.normal(size=(5, 2))
        oracle = GroundTruthOracle(CurveSpec(3, "news", rng.normal(size=(3, 2, 4))), u)
        rows = np.array([4, 1])
        grid = np.linspace(0, 1, 3)

        np.testing.assert_array_equal(
            oracle.true_curves(x[rows], grid, rows), oracle.true_curves(x, grid)[rows]
        )

    def test_news_oracle_without_hidden(self):
        oracle = GroundTruthOracle(CurveSpec(3, "news", np.ones((3, 2, 4))))
        with pytest.raises(ContractError):
            oracle.true_curves(np.ones((1, 4)), np.array([0.5]))

    def test_malformed_payload(self):
        with pytest.raises(ValidationError):
            CurveSpec.from_dict({"family": 1, "style": "tcga"})
