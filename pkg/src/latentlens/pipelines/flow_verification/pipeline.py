"""Flow verification pipeline."""

from kedro.pipeline import Pipeline, node

from .nodes import class_transport, closed_form, density_identity, verification_report


def create_pipeline(**kwargs) -> Pipeline:
    """Create the flow verification pipeline."""
    return Pipeline(
        [
            node(
                func=closed_form,
                inputs=["integrator_spec", "params:verify", "params:run"],
                outputs="closed_form_results",
                name="closed_form_node",
                tags=["verify"],
            ),
            node(
                func=density_identity,
                inputs=["mixture_model", "noise_schedule", "params:verify", "params:run"],
                outputs="density_identity_results",
                name="density_identity_node",
                tags=["verify"],
            ),
            node(
                func=class_transport,
                inputs=["noise_schedule", "integrator_spec", "params:verify", "params:run"],
                outputs="class_transport_results",
                name="class_transport_node",
                tags=["verify"],
            ),
            node(
                func=verification_report,
                inputs=[
                    "closed_form_results",
                    "density_identity_results",
                    "class_transport_results",
                    "gradient_gate_report",
                ],
                outputs="verification_report",
                name="verification_report_node",
                tags=["verify", "reporting"],
            ),
        ]
    )
