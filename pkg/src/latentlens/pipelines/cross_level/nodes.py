"""Cross-level accuracy nodes: one matrix per trainer, summary checks and heatmaps."""

import logging
from typing import Any, Dict

import numpy as np
import pandas as pd

from latentlens.learning.cross_level import AccuracyMatrix, cross_level_matrix
from latentlens.learning.mlp import TrainingHyper
from latentlens.monitoring.checks import bound_check, checks_report
from latentlens.pool.operations import stage_stream
from latentlens.pool.records import SeedPool
from latentlens.rendering import emit_svg

logger = logging.getLogger(__name__)

DIAGONAL_CONTRAST_MIN = 0.15
BLOCK_CONTRAST_MIN = 0.10
CONTROL_CONTRAST_MAX = 0.05
TRAINER_AGREEMENT_MAX = 0.15


def accuracy_matrix(
    seed_pool: SeedPool,
    gradient_gate_report: Dict[str, Any],
    training: Dict[str, Any],
    run: Dict[str, Any],
    trainer: str,
) -> pd.DataFrame:
    """Train per level with ``trainer`` and test on every level.

    Returns:
        Long table with one row per (train_level, test_level) cell.
    """
    matrix = cross_level_matrix(
        seed_pool,
        trainer,
        TrainingHyper.from_spec(training),
        stage_stream(run["seed"], f"cross_level/{trainer}"),
        space=training.get("space", "seed"),
        workers=run.get("workers"),
    )
    return matrix.to_frame()


def summarize_heatmaps(
    mlp_accuracy_matrix: pd.DataFrame, lda_accuracy_matrix: pd.DataFrame, run: Dict[str, Any]
) -> Dict[str, Any]:
    """Contrasts of both matrices and their cellwise agreement.

    The deterministic sampler is expected to show a hot top-left block; the
    stochastic control is expected to show none.
    """
    mlp = AccuracyMatrix.from_frame(mlp_accuracy_matrix)
    lda = AccuracyMatrix.from_frame(lda_accuracy_matrix)
    difference = float(np.max(np.abs(mlp.accuracies - lda.accuracies)))

    checks = []
    for matrix in (mlp, lda):
        if run["sampler"] == "ddim":
            checks.append(
                bound_check(f"{matrix.trainer}_diagonal_contrast", matrix.diagonal_contrast(), DIAGONAL_CONTRAST_MIN)
            )
            checks.append(bound_check(f"{matrix.trainer}_block_contrast", matrix.block_contrast(), BLOCK_CONTRAST_MIN))
        else:
            checks.append(
                bound_check(
                    f"{matrix.trainer}_control_contrast",
                    matrix.diagonal_contrast(),
                    CONTROL_CONTRAST_MAX,
                    kind="abs_max",
                )
            )
    checks.append(bound_check("mlp_lda_max_cell_difference", difference, TRAINER_AGREEMENT_MAX, kind="max"))
    return checks_report(
        "heatmap",
        checks,
        sampler=run["sampler"],
        matrices={"mlp": mlp.summary(), "lda": lda.summary()},
        mlp_lda_max_cell_difference=difference,
    )


def render_heatmaps(
    mlp_accuracy_matrix: pd.DataFrame, lda_accuracy_matrix: pd.DataFrame, run: Dict[str, Any]
) -> Dict[str, str]:
    """One annotated SVG heatmap per trainer, keyed by file stem."""
    figures = {}
    for trainer, table in (("mlp", mlp_accuracy_matrix), ("lda", lda_accuracy_matrix)):
        title = f"{trainer.upper()} cross-level accuracy ({run['sampler']})"
        figures[f"{trainer}_heatmap"] = emit_svg("heatmap", table, title=title)
    return figures
