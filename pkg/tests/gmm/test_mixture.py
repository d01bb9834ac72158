"""Tests for mixture construction and its closed-form analytics."""

import numpy as np
import pytest

from latentlens.gmm.mixture import (
    MixtureError,
    MixtureModel,
    SingularCovarianceError,
    class_posterior,
    class_posteriors,
    log_density,
    marginal_mixture,
    sample_data,
    score,
    score_divergence,
)
from latentlens.gmm.schedule import NoiseSchedule, alpha_bar


class TestConstruction:
    def test_weights_must_sum_to_one(self):
        with pytest.raises(MixtureError, match="sum to 1"):
            MixtureModel([0.5, 0.4], [[0.0], [1.0]], [[[1.0]], [[1.0]]], [0, 1])

    def test_singular_covariance_names_component(self):
        with pytest.raises(SingularCovarianceError) as excinfo:
            MixtureModel([0.5, 0.5], [[0.0, 0.0], [1.0, 1.0]], [np.eye(2), np.zeros((2, 2))], [0, 1])
        assert excinfo.value.component == 1

    def test_uncovered_class_rejected(self):
        with pytest.raises(MixtureError, match="not covered"):
            MixtureModel([0.5, 0.5], [[0.0], [1.0]], [[[1.0]], [[1.0]]], [0, 2])

    def test_scalar_covariance_means_scaled_identity(self):
        m = MixtureModel.from_components([{"weight": 1.0, "mean": [0.0, 0.0, 0.0], "covariance": 2.0, "label": 0}])
        np.testing.assert_array_equal(m.covariances[0], 2.0 * np.eye(3))

    def test_sphere_means_lie_on_sphere(self):
        m = MixtureModel.from_spec({"sphere": {"n_classes": 5, "dimension": 8, "radius": 2.5, "seed": 42}})
        assert (m.n_classes, m.dimension, m.n_components) == (5, 8, 5)
        np.testing.assert_allclose(np.linalg.norm(m.means, axis=1), 2.5)
        np.testing.assert_allclose(m.class_masses(), 0.2)

    def test_spec_needs_exactly_one_form(self):
        with pytest.raises(MixtureError):
            MixtureModel.from_spec({})
        with pytest.raises(MixtureError, match="not both"):
            MixtureModel.from_spec({"components": [], "sphere": {}})

    def test_arrays_are_read_only(self, separated_mixture):
        with pytest.raises(ValueError):
            separated_mixture.means[0, 0] = 1.0


class TestAnalytics:
    def test_standard_normal_log_density(self, standard_normal):
        assert log_density(standard_normal, np.zeros(2)) == pytest.approx(-np.log(2.0 * np.pi))

    def test_single_gaussian_score(self):
        m = MixtureModel([1.0], [[1.0, -2.0]], [np.eye(2)], [0])
        x = np.array([0.5, 0.5])
        np.testing.assert_allclose(score(m, x), [0.5, -2.5])

    def test_standard_normal_divergence(self, standard_normal):
        assert score_divergence(standard_normal, np.array([0.3, -1.2])) == pytest.approx(-2.0)

    def test_score_matches_finite_differences(self, separated_mixture):
        x = np.array([0.7, -0.4])
        h = 1e-5
        numeric = [
            (log_density(separated_mixture, x + h * e) - log_density(separated_mixture, x - h * e)) / (2 * h)
            for e in np.eye(2)
        ]
        np.testing.assert_allclose(score(separated_mixture, x), numeric, atol=1e-5)

    def test_batch_matches_single_points(self, separated_mixture):
        X = np.random.default_rng(0).standard_normal((5, 2)) * 3
        np.testing.assert_allclose(score(separated_mixture, X), [score(separated_mixture, x) for x in X])
        np.testing.assert_allclose(log_density(separated_mixture, X), [log_density(separated_mixture, x) for x in X])

    def test_dimension_mismatch_raises(self, separated_mixture):
        with pytest.raises(MixtureError, match="dimension"):
            score(separated_mixture, np.zeros(3))


class TestMarginal:
    def test_time_zero_is_identity(self, separated_mixture, linear_schedule):
        assert marginal_mixture(separated_mixture, linear_schedule, 0.0) is separated_mixture

    def test_terminal_marginal(self, separated_mixture, linear_schedule):
        m_T = marginal_mixture(separated_mixture, linear_schedule, 1.0)
        a = alpha_bar(linear_schedule, 1.0)
        np.testing.assert_allclose(m_T.means, np.sqrt(a) * separated_mixture.means)
        np.testing.assert_allclose(m_T.covariances, np.broadcast_to(np.eye(2), (3, 2, 2)))
        np.testing.assert_array_equal(m_T.weights, separated_mixture.weights)


class TestPosterior:
    def test_rows_sum_to_one_without_nan(self, separated_mixture):
        X = np.array([[0.0, 0.0], [1e3, -1e3], [6.0, 0.0]])
        posteriors = class_posteriors(separated_mixture, X)
        assert np.all(np.isfinite(posteriors))
        np.testing.assert_allclose(posteriors.sum(axis=1), 1.0)

    def test_component_mean_is_confident(self, separated_mixture):
        posterior = class_posterior(separated_mixture, np.array([6.0, 0.0]))
        assert posterior.n_classes == 3
        assert posterior.probabilities[0] > 0.99

    def test_single_point_only(self, separated_mixture):
        with pytest.raises(MixtureError):
            class_posterior(separated_mixture, np.zeros((2, 2)))


class TestSampleData:
    def test_reproducible(self, separated_mixture):
        a = sample_data(separated_mixture, np.random.default_rng(3), 50)
        b = sample_data(separated_mixture, np.random.default_rng(3), 50)
        np.testing.assert_array_equal(a.points, b.points)
        np.testing.assert_array_equal(a.labels, b.labels)

    def test_labels_follow_components(self, separated_mixture):
        sample = sample_data(separated_mixture, np.random.default_rng(0), 300)
        nearest = np.argmin(
            np.linalg.norm(sample.points[:, None, :] - separated_mixture.means[None], axis=2), axis=1
        )
        assert np.mean(nearest == sample.labels) > 0.99

    def test_rejects_empty_draw(self, separated_mixture):
        with pytest.raises(MixtureError):
            sample_data(separated_mixture, np.random.default_rng(0), 0)


@pytest.fixture
def random_mixture():
    """Three full-covariance components in 3-D, two of them sharing a class."""
    rng = np.random.default_rng(17)
    factors = rng.standard_normal((3, 3, 3))
    covariances = factors @ factors.transpose(0, 2, 1) + 0.5 * np.eye(3)
    return MixtureModel([0.5, 0.3, 0.2], rng.standard_normal((3, 3)) * 2.0, covariances, [0, 1, 1])


@pytest.fixture
def random_points(random_mixture):
    return np.random.default_rng(18).standard_normal((100, 3)) * 3.0


class TestFiniteDifferences:
    H = 1e-5

    def test_score_at_random_points(self, random_mixture, random_points):
        steps = self.H * np.eye(3)
        numeric = np.stack(
            [
                (log_density(random_mixture, random_points + e) - log_density(random_mixture, random_points - e))
                / (2 * self.H)
                for e in steps
            ],
            axis=1,
        )
        np.testing.assert_allclose(score(random_mixture, random_points), numeric, rtol=0, atol=1e-6)

    def test_divergence_at_random_points(self, random_mixture, random_points):
        steps = self.H * np.eye(3)
        numeric = sum(
            (score(random_mixture, random_points + e)[:, i] - score(random_mixture, random_points - e)[:, i])
            / (2 * self.H)
            for i, e in enumerate(steps)
        )
        np.testing.assert_allclose(score_divergence(random_mixture, random_points), numeric, rtol=1e-4, atol=1e-6)


def _moments(m: MixtureModel):
    mean = m.weights @ m.means
    second = np.einsum("k,kij->ij", m.weights, m.covariances + np.einsum("ki,kj->kij", m.means, m.means))
    return mean, second - np.outer(mean, mean)


class TestMarginalMonteCarlo:
    def test_forward_process_moments(self, linear_schedule):
        m = MixtureModel([0.4, 0.6], [[3.0, 0.0], [-1.0, 2.0]], [np.diag([0.5, 1.5]), np.eye(2)], [0, 1])
        a = alpha_bar(linear_schedule, 0.5)
        rng = np.random.default_rng(21)
        n = 100_000
        x0 = sample_data(m, rng, n).points
        xt = np.sqrt(a) * x0 + np.sqrt(1.0 - a) * rng.standard_normal(x0.shape)

        mean, covariance = _moments(marginal_mixture(m, linear_schedule, 0.5))
        centered = xt - xt.mean(axis=0)
        np.testing.assert_array_less(np.abs(xt.mean(axis=0) - mean), 3 * xt.std(axis=0) / np.sqrt(n))
        products = np.einsum("ni,nj->nij", centered, centered)
        standard_errors = products.std(axis=0) / np.sqrt(n)
        np.testing.assert_array_less(np.abs(products.mean(axis=0) - covariance), 3 * standard_errors)

    def test_single_component_closed_form(self):
        m = MixtureModel([1.0], [[2.0, 0.0]], [np.eye(2)], [0])
        m_t = marginal_mixture(m, NoiseSchedule.constant(1.0, horizon=2.0), np.log(4.0))
        np.testing.assert_allclose(m_t.means[0], [1.0, 0.0], atol=1e-9)
        np.testing.assert_allclose(m_t.covariances[0], np.eye(2), atol=1e-9)
