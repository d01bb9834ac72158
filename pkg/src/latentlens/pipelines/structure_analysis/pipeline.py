"""Structure analysis pipeline."""

from kedro.pipeline import Pipeline, node

from .nodes import filtering_gap, overlay_levels, render_structure, run_structure_sweep, structure_checks


def create_pipeline(**kwargs) -> Pipeline:
    """Create the structure analysis pipeline."""
    return Pipeline(
        [
            node(
                func=run_structure_sweep,
                inputs=["seed_pool", "params:structure", "params:run"],
                outputs=["structure_metrics", "structure_embeddings", "lda_coordinates"],
                name="structure_sweep_node",
                tags=["structure"],
            ),
            node(
                func=overlay_levels,
                inputs=["seed_pool", "params:structure"],
                outputs=["overlay_embedding", "overlay_summary"],
                name="overlay_node",
                tags=["structure"],
            ),
            node(
                func=filtering_gap,
                inputs=["seed_pool", "gradient_gate_report", "params:training", "params:run"],
                outputs="filtering_gap",
                name="filtering_gap_node",
                tags=["structure", "training"],
            ),
            node(
                func=structure_checks,
                inputs=["structure_metrics", "overlay_summary", "filtering_gap"],
                outputs="structure_checks",
                name="structure_checks_node",
                tags=["structure", "reporting"],
            ),
            node(
                func=render_structure,
                inputs=["structure_embeddings", "overlay_embedding"],
                outputs="structure_figures",
                name="render_structure_node",
                tags=["structure", "reporting"],
            ),
        ]
    )
