"""Conditional generation pipeline."""

from kedro.pipeline import Pipeline, node

from .nodes import condgen_checks, filter_threshold, generate_samples, reference_diversity, train_latent_classifier


def create_pipeline(**kwargs) -> Pipeline:
    """Create the conditional generation pipeline.

    Seeds are filtered by the latent classifier before the generator sees them.
    """
    return Pipeline(
        [
            node(
                func=train_latent_classifier,
                inputs=["seed_pool", "gradient_gate_report", "params:training", "params:condgen", "params:run"],
                outputs="latent_classifier",
                name="train_latent_classifier_node",
                tags=["condgen", "training"],
            ),
            node(
                func=filter_threshold,
                inputs=["seed_pool", "params:condgen"],
                outputs="filter_threshold",
                name="filter_threshold_node",
                tags=["condgen"],
            ),
            node(
                func=generate_samples,
                inputs=[
                    "mixture_model",
                    "noise_schedule",
                    "integrator_spec",
                    "latent_classifier",
                    "filter_threshold",
                    "params:condgen",
                    "params:run",
                ],
                outputs=["condgen_reports", "condgen_samples"],
                name="generate_samples_node",
                tags=["condgen"],
            ),
            node(
                func=reference_diversity,
                inputs=["mixture_model", "seed_pool", "params:condgen", "params:run"],
                outputs="diversity_reference",
                name="reference_diversity_node",
                tags=["condgen"],
            ),
            node(
                func=condgen_checks,
                inputs=["condgen_reports", "diversity_reference"],
                outputs="condgen_checks",
                name="condgen_checks_node",
                tags=["condgen", "reporting"],
            ),
        ]
    )
