"""Tests for the closed-form and self-consistency checks of the flow map."""

import numpy as np
import pytest

from latentlens.flow.integrators import IntegratorSpec
from latentlens.flow.verification import (
    closed_form_checks,
    lemma1_convergence,
    rk4_order_check,
    scaling_factor,
    separated_pair_mixture,
    translation_shift,
    verify_lemma1,
    verify_theorem1,
)
from latentlens.gmm.schedule import NoiseSchedule


class TestExactMaps:
    def test_translation_shift(self):
        s = NoiseSchedule.constant(1.0)
        np.testing.assert_allclose(translation_shift(s), [-(1.0 - np.exp(-0.5)) * 3.0, 0.0])

    def test_scaling_factor(self):
        a = np.exp(-1.0)
        assert scaling_factor(NoiseSchedule.constant(1.0)) == pytest.approx(np.sqrt((4.0 * a + 1.0 - a) / 4.0))

    def test_separated_pair(self):
        m = separated_pair_mixture(12.0, dimension=2)
        np.testing.assert_array_equal(m.means, [[-6.0, 0.0], [6.0, 0.0]])
        assert m.n_classes == 2


class TestClosedFormChecks:
    def test_all_pass_at_moderate_resolution(self):
        checks = closed_form_checks(IntegratorSpec("rk4", 128), np.random.default_rng(0), n_points=8)
        assert {c.name for c in checks} >= {"identity_forward", "translation_backward", "scaling_logdet", "scaling_lemma1"}
        failed = [c.to_dict() for c in checks if not c.passed]
        assert not failed

    def test_rk4_order(self):
        check = rk4_order_check((8, 16))
        assert check.passed
        assert check.error >= 8.0


class TestDensityIdentity:
    def test_gap_is_small(self, separated_mixture, linear_schedule):
        points = np.random.default_rng(2).standard_normal((5, 2)) * 3.0
        report = verify_lemma1(separated_mixture, linear_schedule, points, IntegratorSpec("rk4", 512))
        assert report.abs_err.shape == (5,)
        assert report.max_abs_err < 1e-3

    def test_single_point_report_is_scalar(self, separated_mixture, linear_schedule):
        report = verify_lemma1(separated_mixture, linear_schedule, np.array([1.0, 1.0]), IntegratorSpec("rk4", 64))
        assert isinstance(report.abs_err, float)
        assert report.abs_err == pytest.approx(abs(report.lhs - report.rhs))

    def test_gap_converges(self, separated_mixture, linear_schedule):
        points = np.random.default_rng(3).standard_normal((4, 2))
        assert lemma1_convergence(separated_mixture, linear_schedule, points, (32, 64)).passed


class TestClassTransport:
    def test_separated_classes_are_transported(self, linear_schedule):
        report = verify_theorem1(
            separated_pair_mixture(12.0), linear_schedule, 200, np.random.default_rng(4), IntegratorSpec("rk4", 128)
        )
        assert report.n == 200
        assert report.n_diverged == 0
        assert report.roundtrip_class_agreement >= 0.99
        assert report.latent_nn_purity >= 0.99

    def test_needs_points(self, linear_schedule):
        with pytest.raises(ValueError):
            verify_theorem1(separated_pair_mixture(), linear_schedule, 0, np.random.default_rng(0), IntegratorSpec())
