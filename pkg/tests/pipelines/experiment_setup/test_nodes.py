"""Tests for the experiment setup nodes."""

from latentlens.learning.mlp import HEADS
from latentlens.pipelines.experiment_setup.nodes import (
    build_integrator,
    build_mixture,
    build_schedule,
    check_gradients,
)


class TestSetupNodes:
    def test_models_from_sections(self, sections):
        mixture = build_mixture(sections["mixture"])
        schedule = build_schedule(sections["schedule"])
        spec = build_integrator(sections["integrator"])
        assert mixture.n_classes == 3 and mixture.dimension == 2
        assert schedule.form == "linear"
        assert (spec.method, spec.steps) == ("rk4", 64)

    def test_gradient_gate_report(self, sections):
        report = check_gradients(sections["run"])
        assert report["passed"]
        assert set(report["heads"]) == set(HEADS)
        for head in report["heads"].values():
            assert head["max_relative_error"] <= head["tolerance"]
