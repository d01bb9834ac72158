"""Structure analysis nodes.

Separability per confidence level (discriminant score, PCA baseline, 2-D
embeddings), the overlay of the least confident level onto the most confident
one, and the gap between a level-1 classifier and one trained on the whole pool.
"""

import logging
from typing import Any, Dict, Tuple

import numpy as np
import pandas as pd
from scipy.stats import spearmanr

from latentlens.learning.evaluation import evaluate
from latentlens.learning.mlp import TrainingHyper, train_mlp
from latentlens.monitoring.checks import bound_check, checks_report
from latentlens.pool.operations import stage_stream
from latentlens.pool.records import SeedPool
from latentlens.rendering import emit_svg
from latentlens.structure.sweep import StructureReport, overlay, structure_sweep

logger = logging.getLogger(__name__)

LDA_TREND_MAX = -0.7
LDA_DROP_MIN = 0.10
PCA_SPREAD_MAX = 0.02
SILHOUETTE_LDA_MIN = 0.3
SILHOUETTE_RAW_MAX = 0.1
FILTERING_GAP_MIN = 0.10


def run_structure_sweep(
    seed_pool: SeedPool, structure: Dict[str, Any], run: Dict[str, Any]
) -> Tuple[pd.DataFrame, pd.DataFrame, pd.DataFrame]:
    """Metrics, embeddings and raw discriminant coordinates for every level and space."""
    report = structure_sweep(
        seed_pool,
        structure["spaces"],
        stage_stream(run["seed"], "structure"),
        test_fraction=float(structure.get("test_fraction", 0.2)),
        samples_per_class=structure.get("samples_per_class"),
        include_unconditional=bool(structure.get("include_unconditional", True)),
        workers=run.get("workers"),
    )
    return report.metrics, report.embeddings, report.lda_coordinates


def overlay_levels(seed_pool: SeedPool, structure: Dict[str, Any]) -> Tuple[pd.DataFrame, Dict[str, Any]]:
    """Project the low level through the basis fitted on the high level (seed space)."""
    high_level = int(structure.get("high_level") or 1)
    low_level = int(structure.get("low_level") or seed_pool.n_levels)
    high = seed_pool.select(level=high_level)
    low = seed_pool.select(level=low_level)
    result = overlay(high.seeds(), high.labels(), low.seeds(), low.labels())
    summary = {
        "high_level": high_level,
        "low_level": low_level,
        "margin_stats": result.margin_stats,
        "interstitial": bool(result.interstitial()),
    }
    return result.embedding, summary


def filtering_gap(
    seed_pool: SeedPool, gradient_gate_report: Dict[str, Any], training: Dict[str, Any], run: Dict[str, Any]
) -> Dict[str, Any]:
    """Accuracy and macro-F1 of an MLP trained and tested on level 1 versus on the whole pool."""
    hyper = TrainingHyper.from_spec(training)
    space = training.get("space", "seed")
    results = {}
    for name, level in (("level_1", 1), ("unconditional", None)):
        train = seed_pool.select(level=level, split="train")
        test = seed_pool.select(level=level, split="test")
        model = train_mlp(
            train.features(space),
            train.labels(),
            "classifier",
            hyper,
            stage_stream(run["seed"], f"filtering_gap/{name}"),
            n_classes=seed_pool.n_classes,
        )
        results[name] = evaluate(model, test.features(space), test.labels(), seed_pool.n_classes).to_dict()
    gap = results["level_1"]["accuracy"] - results["unconditional"]["accuracy"]
    logger.info(
        f"Filtering gap: level-1 accuracy {results['level_1']['accuracy']:.3f} vs "
        f"unconditional {results['unconditional']['accuracy']:.3f}"
    )
    return {
        "accuracy_gap": gap,
        "macro_f1_gap": results["level_1"]["macro_f1"] - results["unconditional"]["macro_f1"],
        **{name: {k: v for k, v in r.items() if k != "confusion"} for name, r in results.items()},
    }


def _level_row(metrics: pd.DataFrame, space: str, level: Any) -> pd.Series:
    rows = metrics[(metrics["space"] == space) & (metrics["level"].astype(str) == str(level))]
    return rows.iloc[0]


def structure_checks(
    structure_metrics: pd.DataFrame, overlay_summary: Dict[str, Any], filtering_gap: Dict[str, Any]
) -> Dict[str, Any]:
    """Trend checks over the sweep, the overlay and the filtering gap."""
    report = StructureReport(metrics=structure_metrics, embeddings=pd.DataFrame(), lda_coordinates=pd.DataFrame())
    spaces = list(dict.fromkeys(structure_metrics["space"]))
    checks = []
    trend = None
    if "seed" in spaces:
        scores = report.lda_scores("seed")
        last = int(scores.index.max())
        if len(scores) > 1 and scores.nunique() > 1:
            trend = float(spearmanr(scores.index, scores.to_numpy()).correlation)
        checks.append(bound_check("seed_lda_trend_spearman", trend, LDA_TREND_MAX, kind="max"))
        checks.append(bound_check("seed_lda_score_drop", float(scores.loc[1] - scores.loc[last]), LDA_DROP_MIN))
        checks.append(bound_check("seed_pca_spread", report.pca_spread("seed"), PCA_SPREAD_MAX, kind="max"))
        level_1 = _level_row(structure_metrics, "seed", 1)
        checks.append(bound_check("seed_level_1_silhouette_lda", level_1["silhouette_lda"], SILHOUETTE_LDA_MIN))
        checks.append(
            bound_check("seed_level_1_silhouette_raw", level_1["silhouette_raw"], SILHOUETTE_RAW_MAX, kind="max")
        )
        if "sample" in spaces:
            seed_low = _level_row(structure_metrics, "seed", last)["lda_score"]
            sample_low = _level_row(structure_metrics, "sample", last)["lda_score"]
            checks.append(bound_check("sample_over_seed_lowest_level", float(sample_low - seed_low), 0.0))

    stats = overlay_summary["margin_stats"]
    checks.append(bound_check("overlay_interstitial", stats["high"]["q1"] - stats["low"]["median"], 0.0))
    checks.append(bound_check("filtering_gap", filtering_gap["accuracy_gap"], FILTERING_GAP_MIN))
    for check in checks:
        if check["value"] is not None and not np.isfinite(check["value"]):
            check["value"] = None
            check["status"] = "skipped"
    return checks_report("structure", checks)


def render_structure(structure_embeddings: pd.DataFrame, overlay_embedding: pd.DataFrame) -> Dict[str, str]:
    """One scatter per (space, level, kind), plus both overlay sets drawn on one set of axes."""
    figures = {}
    for (space, level, kind), table in structure_embeddings.groupby(["space", "level", "kind"], sort=True):
        name = f"{space}_level_{level}_{kind}"
        figures[name] = emit_svg("scatter", table, title=f"{kind.upper()} embedding, {space} space, level {level}")
    figures["overlay"] = emit_svg("overlay", overlay_embedding, title="Low-confidence seeds on the high-confidence basis")
    return figures
