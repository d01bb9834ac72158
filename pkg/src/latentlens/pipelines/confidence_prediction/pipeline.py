"""Confidence prediction pipeline."""

from kedro.pipeline import Pipeline, node

from .nodes import confidence_curve, render_curve, train_regressor


def create_pipeline(**kwargs) -> Pipeline:
    """Create the confidence prediction pipeline."""
    return Pipeline(
        [
            node(
                func=train_regressor,
                inputs=["seed_pool", "gradient_gate_report", "params:training", "params:prediction", "params:run"],
                outputs="confidence_regressor",
                name="train_regressor_node",
                tags=["predict", "training"],
            ),
            node(
                func=confidence_curve,
                inputs=[
                    "confidence_regressor",
                    "mixture_model",
                    "noise_schedule",
                    "integrator_spec",
                    "params:prediction",
                    "params:run",
                ],
                outputs=["confidence_curve", "confidence_curve_checks"],
                name="confidence_curve_node",
                tags=["predict"],
            ),
            node(
                func=render_curve,
                inputs="confidence_curve",
                outputs="confidence_curve_figure",
                name="render_curve_node",
                tags=["predict", "reporting"],
            ),
        ]
    )
