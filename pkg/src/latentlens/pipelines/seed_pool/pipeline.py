"""Seed pool pipeline."""

from kedro.pipeline import Pipeline, node

from .nodes import balance, generate_pool, split_pool, stratify_pool, summarize_pool


def create_pipeline(**kwargs) -> Pipeline:
    """Create the seed pool pipeline.

    generate -> balance per label -> stratify into confidence levels -> train/test split.
    """
    return Pipeline(
        [
            node(
                func=generate_pool,
                inputs=["mixture_model", "noise_schedule", "integrator_spec", "params:run", "params:pool"],
                outputs="raw_pool",
                name="generate_pool_node",
                tags=["pool"],
            ),
            node(
                func=balance,
                inputs=["raw_pool", "params:run"],
                outputs="balanced_pool",
                name="balance_pool_node",
                tags=["pool"],
            ),
            node(
                func=stratify_pool,
                inputs=["balanced_pool", "params:pool"],
                outputs="stratified_pool",
                name="stratify_pool_node",
                tags=["pool"],
            ),
            node(
                func=split_pool,
                inputs=["stratified_pool", "params:run", "params:pool"],
                outputs="seed_pool",
                name="split_pool_node",
                tags=["pool"],
            ),
            node(
                func=summarize_pool,
                inputs="seed_pool",
                outputs="pool_summary",
                name="summarize_pool_node",
                tags=["pool", "reporting"],
            ),
        ]
    )
