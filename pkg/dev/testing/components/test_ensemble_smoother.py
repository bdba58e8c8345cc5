"""
Tests for the ESMDA ensemble smoother
"""

import numpy as np
import pytest

from src.components.ensemble_smoother import (
    CASE_LATENT,
    CASE_LATENT_PROPERTIES,
    DEFAULT_ALPHAS,
    PROPERTY_PRIORS,
    Ensemble,
    EsmdaConfig,
    ObservationSet,
    auto_covariance,
    check_alphas,
    cross_covariance,
    esmda_update,
    init_ensemble,
    normalized_mismatch,
    perturb_obs,
    priors_from_config,
    property_bounds,
    run_esmda,
    split_properties,
)
from src.primitives.errors import EnsembleError, InflationScheduleError


def gaussian_ensemble(size, seed=0):
    return Ensemble(np.random.default_rng(seed).standard_normal((size, 1)), 1)


class TestSchedule:
    def test_default_schedule_sums_to_one(self):
        assert check_alphas(DEFAULT_ALPHAS) == pytest.approx(1.0, abs=1e-3)

    def test_uniform_schedule(self):
        assert check_alphas([4.0] * 4) == pytest.approx(1.0)

    @pytest.mark.parametrize("alphas", [[1.0, 1.0], [0.0], [], [2.0, -2.0]])
    def test_invalid(self, alphas):
        with pytest.raises(InflationScheduleError):
            check_alphas(alphas)

    def test_config_validates(self):
        with pytest.raises(InflationScheduleError):
            EsmdaConfig(alphas=(2.0,))
        with pytest.raises(EnsembleError):
            EsmdaConfig(ensemble_size=1)
        assert EsmdaConfig().n_steps == 10


class TestEnsemble:
    def test_case_two_layout(self):
        ens = init_ensemble(CASE_LATENT_PROPERTIES, 50, (2, 3), seed=4)
        assert ens.members.shape == (50, 12)
        assert ens.latents((2, 3)).shape == (50, 2, 3)
        low, high = property_bounds()
        assert np.all(ens.properties >= low) and np.all(ens.properties <= high)

    def test_seeded(self):
        a = init_ensemble(CASE_LATENT, 5, (4,), seed=1)
        b = init_ensemble(CASE_LATENT, 5, (4,), seed=1)
        np.testing.assert_array_equal(a.members, b.members)
        assert a.properties is None

    def test_shape_checks(self):
        with pytest.raises(EnsembleError):
            Ensemble(np.zeros((1, 3)), 3)
        with pytest.raises(EnsembleError):
            Ensemble(np.zeros((4, 3)), 3, CASE_LATENT_PROPERTIES)
        with pytest.raises(EnsembleError):
            init_ensemble(CASE_LATENT, 1, (2,), seed=0)

    def test_split_properties(self):
        phi, k = split_properties(np.array([0.1, 0.2, 0.3, 0.0, np.log(10.0), np.log(100.0)]))
        np.testing.assert_allclose(phi, [0.1, 0.2, 0.3])
        np.testing.assert_allclose(k, [1.0, 10.0, 100.0])

    def test_priors_from_config(self):
        row = {"mean": 0.1, "std": 0.01, "min": 0.05, "max": 0.15}
        priors = priors_from_config({"porosity": [row] * 3, "log_permeability": [row] * 3})
        assert [p.name for p in priors] == [p.name for p in PROPERTY_PRIORS]
        assert priors[4].high == 0.15
        assert priors_from_config(None) == PROPERTY_PRIORS


class TestObservations:
    def test_relative_noise_with_floor(self):
        obs = ObservationSet.from_true_data(np.array([100.0, -50.0, 0.0]))
        np.testing.assert_allclose(obs.c_d, [4.0, 1.0, (1e-6 * 100.0) ** 2])

    def test_perturbation_moments(self):
        obs = ObservationSet(np.array([1.0, -2.0]), np.array([4.0, 1.0]))
        draws = perturb_obs(obs, 2.0, seed=3, size=40000)
        np.testing.assert_allclose(draws.mean(axis=0), obs.d_obs, atol=0.05)
        np.testing.assert_allclose(draws.std(axis=0), np.sqrt([8.0, 2.0]), rtol=0.02)

    def test_non_positive_alpha(self):
        with pytest.raises(InflationScheduleError):
            perturb_obs(ObservationSet(np.zeros(1), np.ones(1)), 0.0, seed=0)

    def test_mismatch(self):
        obs = ObservationSet(np.array([0.0, 0.0]), np.array([1.0, 4.0]))
        np.testing.assert_allclose(normalized_mismatch(np.array([[1.0, 2.0], [0.0, 0.0]]), obs), [1.0, 0.0])

    def test_mismatched_sizes(self):
        with pytest.raises(EnsembleError):
            ObservationSet(np.zeros(3), np.ones(2))


class TestUpdate:
    def test_matches_kalman_formula(self):
        """Small ensemble against the explicit gain with pre-drawn perturbations"""
        rng = np.random.default_rng(2)
        x = rng.standard_normal((6, 3))
        d = x @ rng.standard_normal((3, 2)) + 0.1 * rng.standard_normal((6, 2))
        obs = ObservationSet(np.array([0.5, -0.5]), np.array([0.2, 0.3]))
        d_star = rng.standard_normal((6, 2))

        updated = esmda_update(Ensemble(x, 3), d, obs, 2.0, d_perturbed=d_star)

        joint = np.cov(np.hstack([x, d]).T, ddof=1)
        c_xd, c_dd = joint[:3, 3:], joint[3:, 3:]
        gain = c_xd @ np.linalg.inv(c_dd + 2.0 * np.diag(obs.c_d))
        np.testing.assert_allclose(updated.members, x + (d_star - d) @ gain.T, atol=1e-10)
        assert updated.step == 1

    def test_linear_gaussian_posterior(self):
        """x ~ N(0, 1), d = x, d_obs = 1, C_d = 1: posterior N(0.5, 0.5)"""
        ens = gaussian_ensemble(20000)
        obs = ObservationSet(np.array([1.0]), np.array([1.0]))
        post = esmda_update(ens, ens.members, obs, 1.0, seed=5)
        assert post.members.mean() == pytest.approx(0.5, abs=0.03)
        assert post.members.var() == pytest.approx(0.5, abs=0.03)

    def test_multiple_assimilation_matches_single(self):
        obs = ObservationSet(np.array([1.0]), np.array([1.0]))
        result = run_esmda(
            EsmdaConfig(alphas=(4.0, 4.0, 4.0, 4.0), ensemble_size=20000),
            lambda ens: ens.members.copy(),
            obs,
            gaussian_ensemble(20000, seed=1),
        )
        assert result.posterior.members.mean() == pytest.approx(0.5, abs=0.03)
        assert result.posterior.members.var() == pytest.approx(0.5, abs=0.04)

    def test_properties_clipped_to_bounds(self):
        ens = init_ensemble(CASE_LATENT_PROPERTIES, 8, (1,), seed=0)
        d = ens.members[:, 1:2] * 100.0
        obs = ObservationSet(np.array([1e6]), np.array([1e-6]))
        post = esmda_update(ens, d, obs, 1.0, seed=1)
        low, high = property_bounds()
        assert np.all(post.properties >= low) and np.all(post.properties <= high)
        assert np.any(np.isclose(post.properties, high))

    def test_shape_mismatch(self):
        with pytest.raises(EnsembleError):
            esmda_update(gaussian_ensemble(4), np.zeros((3, 1)), ObservationSet(np.zeros(1), np.ones(1)), 1.0)

    def test_update_vanishes_as_inflation_grows(self):
        """Huge alpha leaves the ensemble almost untouched, shrinking like 1/sqrt(alpha)"""
        rng = np.random.default_rng(6)
        x = rng.standard_normal((10, 3))
        d = x @ rng.standard_normal((3, 4))
        obs = ObservationSet(np.ones(4), np.full(4, 0.1))
        shifts = [
            np.abs(esmda_update(Ensemble(x, 3), d, obs, alpha, seed=3).members - x).max()
            for alpha in (1e9, 1e12)
        ]
        assert shifts[0] < 1e-2
        assert shifts[1] < shifts[0] / 10.0

    def test_member_order_is_irrelevant(self):
        """Permuting members (with their perturbations) permutes the update"""
        rng = np.random.default_rng(8)
        x = rng.standard_normal((7, 3))
        d = x @ rng.standard_normal((3, 2))
        d_star = rng.standard_normal((7, 2))
        obs = ObservationSet(np.array([0.3, -0.2]), np.array([0.5, 0.5]))
        order = rng.permutation(7)

        updated = esmda_update(Ensemble(x, 3), d, obs, 3.0, d_perturbed=d_star)
        permuted = esmda_update(Ensemble(x[order], 3), d[order], obs, 3.0, d_perturbed=d_star[order])
        np.testing.assert_allclose(permuted.members, updated.members[order], atol=1e-10)

    def test_covariances_match_double_loop(self):
        rng = np.random.default_rng(9)
        x = rng.standard_normal((6, 4))
        d = rng.standard_normal((6, 3))
        n = x.shape[0]
        expected = np.zeros((4, 3))
        for a in range(4):
            for b in range(3):
                expected[a, b] = sum(
                    (x[k, a] - x[:, a].mean()) * (d[k, b] - d[:, b].mean()) for k in range(n)
                ) / (n - 1)
        np.testing.assert_allclose(cross_covariance(x, d), expected, atol=1e-10)
        np.testing.assert_allclose(auto_covariance(d), cross_covariance(d, d), atol=1e-12)
        np.testing.assert_allclose(auto_covariance(d), auto_covariance(d).T, atol=1e-12)


class TestRun:
    def test_forward_calls_and_diagnostics(self, mocker):
        forward = mocker.Mock(side_effect=lambda ens: 2.0 * ens.members)
        obs = ObservationSet(np.array([1.0]), np.array([0.01]))
        config = EsmdaConfig(alphas=(2.0, 2.0), ensemble_size=50)
        result = run_esmda(config, forward, obs, gaussian_ensemble(50))

        assert forward.call_count == 3
        assert len(result.ensembles) == 3 and len(result.predictions) == 3
        assert [row.as_row()[:2] for row in result.diagnostics] == [[0, 0.0], [1, 2.0], [2, 2.0]]
        assert result.diagnostics[-1].mean_mismatch < result.diagnostics[0].mean_mismatch
        assert result.prior.step == 0 and result.posterior.step == 2

    def test_seeded_runs_repeat(self):
        obs = ObservationSet(np.array([1.0]), np.array([0.1]))
        config = EsmdaConfig(alphas=(2.0, 2.0), ensemble_size=10, seed=7)
        a = run_esmda(config, lambda e: e.members.copy(), obs, gaussian_ensemble(10))
        b = run_esmda(config, lambda e: e.members.copy(), obs, gaussian_ensemble(10))
        np.testing.assert_array_equal(a.posterior.members, b.posterior.members)
