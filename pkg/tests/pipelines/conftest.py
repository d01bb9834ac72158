"""Fixtures shared by the stage node tests."""

import pytest

from latentlens.config import ExperimentConfig


@pytest.fixture
def sections(tiny_experiment):
    """Validated sections of the tiny experiment, keyed by section name."""
    return ExperimentConfig.from_mapping(tiny_experiment).sections


@pytest.fixture
def gate_report():
    """Passed gradient gate report; training nodes only take it as an ordering input."""
    return {
        "passed": True,
        "heads": {
            "classifier": {"max_relative_error": 1e-7, "tolerance": 1e-4},
            "regressor": {"max_relative_error": 2e-7, "tolerance": 1e-4},
        },
    }
