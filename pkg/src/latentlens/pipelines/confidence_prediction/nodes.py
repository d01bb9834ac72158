"""Confidence prediction nodes: posterior regressor on level-1 seeds and its accuracy curve."""

import logging
from typing import Any, Dict, Tuple

import pandas as pd

from latentlens.flow.integrators import IntegratorSpec
from latentlens.gmm.mixture import MixtureModel
from latentlens.gmm.schedule import NoiseSchedule
from latentlens.learning.confidence_curve import ConfidenceCurve, accuracy_vs_confidence
from latentlens.learning.mlp import MlpModel, TrainingHyper, train_mlp
from latentlens.monitoring.checks import bound_check, checks_report
from latentlens.pool.operations import stage_stream
from latentlens.pool.records import SeedPool
from latentlens.rendering import emit_svg

logger = logging.getLogger(__name__)

CURVE_SPEARMAN_MIN = 0.9


def train_regressor(
    seed_pool: SeedPool,
    gradient_gate_report: Dict[str, Any],
    training: Dict[str, Any],
    prediction: Dict[str, Any],
    run: Dict[str, Any],
) -> MlpModel:
    """Fit the posterior regressor on the training seeds of one confidence level."""
    level = int(prediction.get("train_level", 1))
    train = seed_pool.select(level=level, split="train")
    logger.info(f"Training posterior regressor on {len(train)} level-{level} seeds")
    return train_mlp(
        train.seeds(),
        train.posteriors(),
        "regressor",
        TrainingHyper.from_spec(training),
        stage_stream(run["seed"], "confidence_regressor"),
        n_classes=seed_pool.n_classes,
    )


def confidence_curve(
    confidence_regressor: MlpModel,
    mixture_model: MixtureModel,
    noise_schedule: NoiseSchedule,
    integrator_spec: IntegratorSpec,
    prediction: Dict[str, Any],
    run: Dict[str, Any],
) -> Tuple[pd.DataFrame, Dict[str, Any]]:
    """Accuracy per equal-count bin of predicted confidence on fresh seeds."""
    curve: ConfidenceCurve = accuracy_vs_confidence(
        confidence_regressor,
        mixture_model,
        noise_schedule,
        int(prediction["n_fresh"]),
        int(prediction["bins"]),
        stage_stream(run["seed"], "confidence_curve"),
        integrator_spec,
        workers=run.get("workers"),
    )
    report = checks_report(
        "predict",
        [bound_check("curve_spearman", curve.spearman(), CURVE_SPEARMAN_MIN)],
        **curve.summary(),
    )
    return curve.table, report


def render_curve(confidence_curve: pd.DataFrame) -> str:
    return emit_svg("curve", confidence_curve)
