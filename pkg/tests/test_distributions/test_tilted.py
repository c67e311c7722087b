"""Tests for the tilted Gaussian prior numerics."""

import math

import numpy as np
import pytest
from scipy import integrate, stats
from scipy.optimize import minimize_scalar
from scipy.special import ive

from src.distributions.tilted import (
    TiltedGaussianPrior,
    expected_norm,
    log_normalizer,
    optimal_norm_objective,
    solve_optimal_norm,
    tilted_density,
    tilted_kl,
)
from src.gradcore.tensor import ComputationTape, Tensor
from src.utils.errors import ContractError, DimensionError


def rice_mean(r):
    """E|z| for z ~ N(mu, I_2), |mu| = r, from the Rice distribution's Bessel form."""
    q = 0.25 * r * r
    bessel = (1.0 + 2.0 * q) * ive(0, q) + 2.0 * q * ive(1, q)
    return math.sqrt(0.5 * math.pi) * bessel


def monte_carlo_norm(r, d, draws, seed):
    rng = np.random.default_rng(seed)
    mean = np.zeros(d)
    mean[0] = r
    norms = np.linalg.norm(rng.standard_normal((draws, d)) + mean, axis=1)
    return norms.mean(), norms.std(ddof=1) / math.sqrt(draws)


class TestExpectedNorm:
    """Test cases for the noncentral chi mean."""

    @pytest.mark.parametrize("d", [1, 2, 5, 20])
    def test_zero_noncentrality_is_central_chi_mean(self, d):
        assert expected_norm(0.0, d) == pytest.approx(stats.chi(d).mean(), rel=1e-12)

    @pytest.mark.parametrize("r", [0.3, 1.0, 2.5, 6.0])
    def test_one_dimension_is_folded_normal(self, r):
        folded = math.sqrt(2.0 / math.pi) * math.exp(-0.5 * r * r) + r * (
            1.0 - 2.0 * stats.norm.cdf(-r)
        )
        assert expected_norm(r, 1) == pytest.approx(folded, rel=1e-10)

    @pytest.mark.parametrize("r,d", [(0.5, 2), (2.0, 5), (4.0, 20), (7.5, 1), (8.0, 5)])
    def test_agrees_with_monte_carlo(self, r, d):
        mean, se = monte_carlo_norm(r, d, 200_000, seed=int(10 * r) + d)
        assert abs(expected_norm(r, d) - mean) < 4.0 * se

    def test_large_noncentrality_approaches_norm(self):
        r, d = 60.0, 3
        # E|z| ~ sqrt(r^2 + d - 1) for r >> d
        assert expected_norm(r, d) == pytest.approx(math.sqrt(r * r + d - 1), rel=1e-3)

    def test_increasing_in_r(self):
        values = [expected_norm(r, 4) for r in np.linspace(0.0, 8.0, 17)]
        assert np.all(np.diff(values) > 0)

    @pytest.mark.parametrize("r,d", [(-0.1, 2), (1.0, 0)])
    def test_invalid_arguments(self, r, d):
        with pytest.raises(ContractError):
            expected_norm(r, d)


class TestOptimalNorm:
    """Test cases for solve_optimal_norm."""

    def test_two_dimensions_matches_bessel_minimizer(self):
        result = minimize_scalar(
            lambda r: -3.0 * rice_mean(r) + 0.5 * r * r,
            bounds=(0.0, 6.0),
            method="bounded",
            options={"xatol": 1e-10},
        )
        r_star = solve_optimal_norm(3.0, 2)

        assert r_star == pytest.approx(result.x, abs=1e-5)
        assert r_star == pytest.approx(2.7755, abs=1e-4)

    def test_rice_mean_agrees_with_series(self):
        for r in (0.0, 0.5, 2.7755, 7.0):
            assert expected_norm(r, 2) == pytest.approx(rice_mean(r), rel=1e-10)

    @pytest.mark.parametrize(
        "tau,d", [(3.0, 2), (3.0, 20), (5.0, 20), (2.0, 5), (1.0, 1)]
    )
    def test_minimizes_against_grid_scan(self, tau, d):
        r_star = solve_optimal_norm(tau, d)
        grid = np.arange(0.0, tau + math.sqrt(d) + 5.0, 1e-3)
        scan = np.array([optimal_norm_objective(r, tau, d) for r in grid])

        assert optimal_norm_objective(r_star, tau, d) <= scan.min() + 1e-9
        assert abs(r_star - grid[np.argmin(scan)]) <= 2e-3

    def test_high_dimension_tilt_three_collapses_to_origin(self):
        assert solve_optimal_norm(3.0, 20) == pytest.approx(0.0, abs=1e-3)

    def test_zero_tilt(self):
        assert solve_optimal_norm(0.0, 7) == 0.0

    def test_invalid_tilt(self):
        with pytest.raises(ContractError):
            solve_optimal_norm(-1.0, 2)


class TestTiltedKl:
    """Test cases for the KL shortcut."""

    def test_zero_at_optimal_norm(self):
        prior = TiltedGaussianPrior(tau=3.0, latent_dim=2)
        mu = np.array([[prior.optimal_norm, 0.0]])
        assert tilted_kl(mu, prior).item() == 0.0

    def test_zero_at_origin_when_optimum_is_origin(self):
        prior = TiltedGaussianPrior(tau=3.0, latent_dim=20)
        kl = tilted_kl(np.zeros((3, 20)), prior).item()
        assert kl == pytest.approx(0.0, abs=1e-6)

    def test_value_and_gradient(self):
        prior = TiltedGaussianPrior(tau=3.0, latent_dim=2)
        values = np.array([[1.0, 2.0], [0.5, -0.5]])
        mu = Tensor(values, requires_grad=True)

        with ComputationTape() as tape:
            kl = tilted_kl(mu, prior)
            tape.backward(kl)

        norms = np.linalg.norm(values, axis=1)
        expected = 0.5 * np.sum((norms - prior.optimal_norm) ** 2)
        assert kl.item() == pytest.approx(expected)
        grad = ((norms - prior.optimal_norm) / norms)[:, None] * values
        np.testing.assert_allclose(mu.grad, grad, rtol=1e-10)

    def test_vector_input(self):
        prior = TiltedGaussianPrior(tau=2.0, latent_dim=3)
        assert tilted_kl(np.array([0.0, 0.0, 1.0]), prior).item() >= 0.0

    def test_width_mismatch(self):
        prior = TiltedGaussianPrior(tau=3.0, latent_dim=2)
        with pytest.raises(DimensionError):
            tilted_kl(np.zeros((1, 3)), prior)


class TestTiltedDensity:
    """Test cases for the normalized density."""

    def test_zero_tilt_is_standard_normal(self):
        prior = TiltedGaussianPrior(tau=0.0, latent_dim=3)
        points = np.random.default_rng(4).normal(scale=1.5, size=(50, 3))

        expected = stats.multivariate_normal(np.zeros(3), np.eye(3)).pdf(points)
        np.testing.assert_allclose(
            tilted_density(points, prior), expected, rtol=0, atol=1e-12
        )

    def test_integrates_to_one_in_two_dimensions(self):
        prior = TiltedGaussianPrior(tau=3.0, latent_dim=2)

        def radial(r):
            return 2.0 * math.pi * r * tilted_density(np.array([r, 0.0]), prior)

        total, _ = integrate.quad(radial, 0.0, 20.0, points=[3.0], limit=200)
        assert total == pytest.approx(1.0, abs=1e-3)

    def test_mass_peaks_near_tilt(self):
        prior = TiltedGaussianPrior(tau=4.0, latent_dim=2)
        radii = np.linspace(0.0, 8.0, 801)
        points = np.column_stack([radii, np.zeros_like(radii)])
        shell = radii * tilted_density(points, prior)
        assert 3.8 <= radii[np.argmax(shell)] <= 4.5

    def test_log_normalizer_matches_monte_carlo(self):
        z = np.random.default_rng(9).standard_normal((200_000, 2))
        mc = np.log(np.mean(np.exp(1.5 * np.linalg.norm(z, axis=1))))
        assert log_normalizer(1.5, 2) == pytest.approx(mc, abs=0.01)

    def test_point_width_mismatch(self):
        prior = TiltedGaussianPrior(tau=1.0, latent_dim=2)
        with pytest.raises(DimensionError):
            tilted_density(np.zeros(3), prior)
