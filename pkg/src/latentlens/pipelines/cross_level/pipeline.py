"""Cross-level accuracy pipeline."""

from kedro.pipeline import Pipeline, node

from .nodes import accuracy_matrix, render_heatmaps, summarize_heatmaps


def create_pipeline(**kwargs) -> Pipeline:
    """Create the cross-level accuracy pipeline.

    Fits an MLP and a linear discriminant per confidence level and evaluates each
    on every level's test split.
    """
    return Pipeline(
        [
            node(
                func=lambda pool, gate, training, run: accuracy_matrix(pool, gate, training, run, "mlp"),
                inputs=["seed_pool", "gradient_gate_report", "params:training", "params:run"],
                outputs="mlp_accuracy_matrix",
                name="mlp_accuracy_matrix_node",
                tags=["heatmap", "training"],
            ),
            node(
                func=lambda pool, gate, training, run: accuracy_matrix(pool, gate, training, run, "lda"),
                inputs=["seed_pool", "gradient_gate_report", "params:training", "params:run"],
                outputs="lda_accuracy_matrix",
                name="lda_accuracy_matrix_node",
                tags=["heatmap"],
            ),
            node(
                func=summarize_heatmaps,
                inputs=["mlp_accuracy_matrix", "lda_accuracy_matrix", "params:run"],
                outputs="heatmap_checks",
                name="summarize_heatmaps_node",
                tags=["heatmap", "reporting"],
            ),
            node(
                func=render_heatmaps,
                inputs=["mlp_accuracy_matrix", "lda_accuracy_matrix", "params:run"],
                outputs="heatmap_figures",
                name="render_heatmaps_node",
                tags=["heatmap", "reporting"],
            ),
        ]
    )
