"""Experiment setup pipeline."""

from kedro.pipeline import Pipeline, node

from .nodes import build_integrator, build_mixture, build_schedule, check_gradients


def create_pipeline(**kwargs) -> Pipeline:
    """Create the experiment setup pipeline.

    Builds the mixture, schedule and integrator shared by all stages and runs
    the MLP gradient gate.
    """
    return Pipeline(
        [
            node(
                func=build_mixture,
                inputs="params:mixture",
                outputs="mixture_model",
                name="build_mixture_node",
                tags=["setup"],
            ),
            node(
                func=build_schedule,
                inputs="params:schedule",
                outputs="noise_schedule",
                name="build_schedule_node",
                tags=["setup"],
            ),
            node(
                func=build_integrator,
                inputs="params:integrator",
                outputs="integrator_spec",
                name="build_integrator_node",
                tags=["setup"],
            ),
            node(
                func=check_gradients,
                inputs="params:run",
                outputs="gradient_gate_report",
                name="gradient_gate_node",
                tags=["setup", "verification"],
            ),
        ]
    )
