"""Nodes turning parameter sections into the model objects every stage shares."""

import logging
from typing import Any, Dict

from latentlens.flow.integrators import IntegratorSpec
from latentlens.gmm.mixture import MixtureModel
from latentlens.gmm.schedule import NoiseSchedule
from latentlens.learning.mlp import HEADS, gradient_gate
from latentlens.pool.operations import stage_stream

logger = logging.getLogger(__name__)


def build_mixture(mixture: Dict[str, Any]) -> MixtureModel:
    """Build the data mixture from the ``mixture`` section."""
    m = MixtureModel.from_spec(mixture)
    logger.info(f"Mixture: {m.n_components} components, {m.n_classes} classes, d={m.dimension}")
    return m


def build_schedule(schedule: Dict[str, Any]) -> NoiseSchedule:
    s = NoiseSchedule.from_spec(schedule)
    logger.info(f"Schedule: {s.form}, beta {s.beta_0} -> {s.beta_1}, T={s.horizon}")
    return s


def build_integrator(integrator: Dict[str, Any]) -> IntegratorSpec:
    return IntegratorSpec.from_spec(integrator)


def check_gradients(run: Dict[str, Any]) -> Dict[str, Any]:
    """MLP gradient gate; training nodes take its report as an input so it runs first.

    Raises:
        GradientCheckError: If analytic and finite-difference gradients disagree.
    """
    results = gradient_gate(stage_stream(run["seed"], "gradient_gate"))
    return {
        "passed": all(r.passed for r in results),
        "heads": {
            head: {"max_relative_error": r.max_relative_error, "tolerance": r.tolerance}
            for head, r in zip(HEADS, results)
        },
    }
